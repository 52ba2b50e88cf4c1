//! Seeded conditional-inversion samplers.
//!
//! Bivariate draws invert `x ↦ ∂C/∂u(u, x)`, estimated by a left difference
//! quotient in `u`. Trivariate draws first sample `(u1, u2)` from the
//! `(1, 2)` margin and then invert the normalized mass of a small box around
//! `(u1, u2)` as a function of the third coordinate. Jumps of these numeric
//! conditional distributions become atoms, so singular components are
//! reproduced without any knowledge of their geometry.

use alloc::format;
use alloc::vec::Vec;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::copula::BivariateCopula;
use crate::error::{Error, Result};
use crate::multivariate::NCopula;
use crate::numerics::invert_monotone;

/// Seeded draws stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    seed: u64,
    coords: Vec<f64>,
}

impl SampleBatch {
    /// Batch from row-major coordinates; `dim` is 2 or 3 and every
    /// coordinate must lie in `[0, 1]`.
    pub fn from_coords(dim: usize, seed: u64, coords: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Validation(format!(
                "sample dimension must be 2 or 3, got {dim}"
            )));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: coords.len(),
            });
        }
        if let Some(&bad) = coords.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain {
                what: "sample coordinate",
                value: bad,
            });
        }
        Ok(Self { dim, seed, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Fraction of points with every coordinate at or below `x`.
    pub fn empirical_cdf(&self, x: &[f64]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let hits = self
            .points()
            .filter(|p| p.iter().zip(x).all(|(a, b)| a <= b))
            .count();
        hits as f64 / self.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOptions {
    /// Step of the left difference quotient in `u` for bivariate draws.
    pub h2: f64,
    /// Box half-width for the trivariate conditional distribution.
    pub h3: f64,
    pub inversion_tol: f64,
    /// Allowed decrease of a conditional distribution between coarse checks.
    pub monotone_tol: f64,
    /// Pair redraws allowed when a box carries no mass.
    pub max_retries: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            h2: 1e-7,
            h3: 5e-6,
            inversion_tol: 1e-10,
            monotone_tol: 1e-6,
            max_retries: 100,
        }
    }
}

/// Decrease allowed between two difference quotients: the tolerance plus the
/// floating-point error of the evaluations they combine.
fn slack(tol: f64, magnitude: f64, denom: f64) -> f64 {
    tol + 16.0 * f64::EPSILON * magnitude / denom
}

fn check_monotone<F: Fn(f64) -> f64>(cond: F, tol: f64, u: f64) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=8 {
        let x = i as f64 / 8.0;
        let y = cond(x);
        if y.is_nan() || y < prev - tol {
            return Err(Error::NonMonotoneConditional { u });
        }
        prev = prev.max(y);
    }
    Ok(())
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn draw_pair<R: Rng>(
    c: &BivariateCopula,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<(f64, f64)> {
    let u: f64 = rng.sample(Open01);
    let t: f64 = rng.sample(Open01);
    let h = opts.h2.min(u);
    let lo = u - h;
    let cond = |x: f64| (c.at(u, x) - c.at(lo, x)) / h;
    check_monotone(cond, slack(opts.monotone_tol, 1.0, h), u)?;
    Ok((u, invert_monotone(cond, t, opts.inversion_tol)))
}

/// Draws `n` points from `c` by conditional inversion.
pub fn sample2(c: &BivariateCopula, n: usize, seed: u64) -> Result<SampleBatch> {
    sample2_with(c, n, seed, &SamplerOptions::default())
}

pub fn sample2_with(
    c: &BivariateCopula,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    let mut rng = rng(seed);
    let mut coords = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let (u, v) = draw_pair(c, &mut rng, opts)?;
        coords.push(u);
        coords.push(v);
    }
    Ok(SampleBatch {
        dim: 2,
        seed,
        coords,
    })
}

/// Draws `n` points from a 3-copula: the first two coordinates from its
/// `(1, 2)` margin, the third by inverting the box-mass conditional.
pub fn sample3(c: &NCopula, n: usize, seed: u64) -> Result<SampleBatch> {
    sample3_with(c, n, seed, &SamplerOptions::default())
}

pub fn sample3_with(
    c: &NCopula,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    if c.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: c.dim(),
        });
    }
    let margin = c.margin2(0, 1)?;
    let mut rng = rng(seed);
    let mut coords = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let mut retries = 0;
        let (u1, u2, z) = loop {
            let (u1, u2) = draw_pair(&margin, &mut rng, opts)?;
            let s: f64 = rng.sample(Open01);
            let (a_lo, a_hi) = (u1 - opts.h3.min(u1), u1);
            let (b_lo, b_hi) = ((u2 - opts.h3).max(0.0), (u2 + opts.h3).min(1.0));
            let mass = |z: f64| {
                c.at(&[a_hi, b_hi, z]) - c.at(&[a_hi, b_lo, z]) - c.at(&[a_lo, b_hi, z])
                    + c.at(&[a_lo, b_lo, z])
            };
            let total = mass(1.0);
            if total > 0.0 {
                let cond = |z: f64| mass(z) / total;
                check_monotone(cond, slack(opts.monotone_tol, 4.0, total), u1)?;
                break (u1, u2, invert_monotone(cond, s, opts.inversion_tol));
            }
            retries += 1;
            if retries > opts.max_retries {
                return Err(Error::ZeroConditionalMass { u1, u2, retries });
            }
        };
        coords.extend_from_slice(&[u1, u2, z]);
    }
    Ok(SampleBatch {
        dim: 3,
        seed,
        coords,
    })
}
