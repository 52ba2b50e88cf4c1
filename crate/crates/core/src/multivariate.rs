//! n-variate MM and RMM copulas with `p` maxima and `n - p` minima.
//!
//! Coordinates `0..p` are max-linked and `p..n` are min-linked (0-based).
//! The RMM family is evaluated by its single closed-form term; the MM family
//! by the inclusion–exclusion sum over subsets of the min-linked block, which
//! makes it an independent path for cross-validation.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::copula::{BivariateCopula, Copula2};
use crate::error::{unit, Error, Result};
use crate::generator::{Generator, MMGenerator, MmKind};

/// Raw evaluator of an n-copula.
pub trait CopulaN: Send + Sync {
    fn dim(&self) -> usize;
    /// Unclamped value; callers pass `dim()` coordinates in `[0, 1]`.
    fn cdf(&self, u: &[f64]) -> f64;
    fn label(&self) -> String;
}

#[derive(Clone)]
pub struct NCopula(Arc<dyn CopulaN>);

impl fmt::Debug for NCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NCopula({}, dim={})", self.label(), self.dim())
    }
}

impl<C: CopulaN + 'static> From<C> for NCopula {
    fn from(c: C) -> Self {
        Self(Arc::new(c))
    }
}

impl NCopula {
    pub fn new<C: CopulaN + 'static>(c: C) -> Self {
        Self(Arc::new(c))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn label(&self) -> String {
        self.0.label()
    }

    /// Domain- and dimension-checked evaluation.
    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: u.len(),
            });
        }
        for &x in u {
            unit("u_i", x)?;
        }
        Ok(self.at(u))
    }

    /// Evaluation clamped into the Fréchet–Hoeffding band.
    pub fn at(&self, u: &[f64]) -> f64 {
        let c = self.0.cdf(u);
        let n = u.len() as f64;
        let lo = (u.iter().sum::<f64>() - (n - 1.0)).max(0.0);
        let hi = u.iter().copied().fold(1.0, f64::min);
        if c.is_nan() {
            return lo;
        }
        c.max(lo).min(hi)
    }

    pub fn raw(&self, u: &[f64]) -> f64 {
        self.0.cdf(u)
    }

    /// `Π_n`
    pub fn product(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self::new(ProductN(n)))
    }

    /// `M_n(u) = min_i u_i`
    pub fn min(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self::new(MinN(n)))
    }

    /// A bivariate copula viewed as a 2-copula of this type.
    pub fn from_bivariate(c: &BivariateCopula) -> Self {
        Self::new(FromBivariate(c.clone()))
    }

    /// Bivariate margin in coordinates `i`, `j`; all others set to 1.
    pub fn margin2(&self, i: usize, j: usize) -> Result<BivariateCopula> {
        let n = self.dim();
        if i >= n || j >= n || i == j {
            return Err(Error::Validation(format!(
                "invalid margin ({i}, {j}) of a {n}-copula"
            )));
        }
        Ok(BivariateCopula::new(Margin2 {
            c: self.clone(),
            i,
            j,
        }))
    }

    /// Signed inclusion–exclusion flip in the coordinates `idx`.
    pub fn flip_vars(&self, idx: &[usize]) -> Result<Self> {
        let n = self.dim();
        if idx.is_empty() {
            return Err(Error::Validation(String::from(
                "flip_vars needs at least one index",
            )));
        }
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != idx.len() || sorted[sorted.len() - 1] >= n {
            return Err(Error::Validation(format!(
                "invalid flip indices {idx:?} for dimension {n}"
            )));
        }
        Ok(Self::new(FlipVars {
            c: self.clone(),
            idx: sorted,
        }))
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: n,
        });
    }
    Ok(())
}

struct ProductN(usize);
impl CopulaN for ProductN {
    fn dim(&self) -> usize {
        self.0
    }
    fn cdf(&self, u: &[f64]) -> f64 {
        u.iter().product()
    }
    fn label(&self) -> String {
        format!("pi{}", self.0)
    }
}

struct MinN(usize);
impl CopulaN for MinN {
    fn dim(&self) -> usize {
        self.0
    }
    fn cdf(&self, u: &[f64]) -> f64 {
        u.iter().copied().fold(1.0, f64::min)
    }
    fn label(&self) -> String {
        format!("m{}", self.0)
    }
}

struct FromBivariate(BivariateCopula);
impl CopulaN for FromBivariate {
    fn dim(&self) -> usize {
        2
    }
    fn cdf(&self, u: &[f64]) -> f64 {
        self.0.raw(u[0], u[1])
    }
    fn label(&self) -> String {
        self.0.label()
    }
}

struct Margin2 {
    c: NCopula,
    i: usize,
    j: usize,
}
impl Copula2 for Margin2 {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        let mut x = vec![1.0; self.c.dim()];
        x[self.i] = u;
        x[self.j] = v;
        self.c.at(&x)
    }
    fn label(&self) -> String {
        format!("margin({}, {}, {})", self.c.label(), self.i + 1, self.j + 1)
    }
}

struct FlipVars {
    c: NCopula,
    idx: Vec<usize>,
}
impl CopulaN for FlipVars {
    fn dim(&self) -> usize {
        self.c.dim()
    }
    fn cdf(&self, u: &[f64]) -> f64 {
        let mut x = u.to_vec();
        let mut total = 0.0;
        for mask in 0u32..(1 << self.idx.len()) {
            for (bit, &i) in self.idx.iter().enumerate() {
                x[i] = if mask >> bit & 1 == 1 {
                    1.0 - u[i]
                } else {
                    1.0
                };
            }
            let term = self.c.at(&x);
            if mask.count_ones() % 2 == 1 {
                total -= term;
            } else {
                total += term;
            }
        }
        total
    }
    fn label(&self) -> String {
        let idx: Vec<usize> = self.idx.iter().map(|i| i + 1).collect();
        format!("flip({}, {:?})", self.c.label(), idx)
    }
}

/// Base copula, one generator per coordinate, and the number `p` of
/// max-linked coordinates (`1 ≤ p ≤ n - 1`).
#[derive(Clone)]
pub struct MMNSpec<G> {
    base: NCopula,
    generators: Vec<G>,
    p: usize,
}

impl<G> MMNSpec<G> {
    pub fn new(base: NCopula, generators: Vec<G>, p: usize) -> Result<Self> {
        let n = base.dim();
        if generators.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: generators.len(),
            });
        }
        if p == 0 || p >= n {
            return Err(Error::MaxCount { p, n });
        }
        Ok(Self {
            base,
            generators,
            p,
        })
    }

    pub fn base(&self) -> &NCopula {
        &self.base
    }

    pub fn generators(&self) -> &[G] {
        &self.generators
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }
}

/// `max{0, a} - max{0, min{a, b}}`, evaluated as `max{0, min{a, a - b}}`.
#[inline]
pub fn clipped_difference(a: f64, b: f64) -> f64 {
    a.min(a - b).max(0.0)
}

struct MmN {
    spec: MMNSpec<MMGenerator>,
}

impl CopulaN for MmN {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn cdf(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let (n, p) = (self.spec.dim(), self.spec.p);
        let gens = &self.spec.generators;
        let images: Vec<f64> = gens.iter().zip(u).map(|(g, &x)| g.eval(x)).collect();
        let stars: Vec<f64> = gens.iter().zip(u).map(|(g, &x)| g.star(x)).collect();
        let lead = stars[..p].iter().copied().fold(f64::INFINITY, f64::min);
        let mut x = images.clone();
        let mut total = 0.0;
        for mask in 0u32..(1 << (n - p)) {
            let mut lo = lead;
            let mut hi: f64 = 0.0;
            for k in p..n {
                if mask >> (k - p) & 1 == 1 {
                    x[k] = 1.0;
                    lo = lo.min(stars[k]);
                } else {
                    x[k] = images[k];
                    hi = hi.max(stars[k]);
                }
            }
            let weight = (lo - hi).max(0.0);
            if weight > 0.0 {
                total += self.spec.base.at(&x) * weight;
            }
        }
        total
    }

    fn label(&self) -> String {
        let gens: Vec<String> = self.spec.generators.iter().map(|g| g.label()).collect();
        format!(
            "mm_n({}, [{}], p={})",
            self.spec.base.label(),
            gens.join(", "),
            self.spec.p
        )
    }
}

/// n-variate MM copula. Max-linked coordinates take F1 generators and
/// min-linked ones F2 generators.
pub fn mm_n(spec: &MMNSpec<MMGenerator>) -> Result<NCopula> {
    for (i, g) in spec.generators.iter().enumerate() {
        let want = if i < spec.p { MmKind::F1 } else { MmKind::F2 };
        if g.kind() != want {
            return Err(Error::Validation(format!(
                "generator {} ({}) must be of class {want:?}",
                i + 1,
                g.label()
            )));
        }
    }
    Ok(NCopula::new(MmN { spec: spec.clone() }))
}

struct RmmN {
    spec: MMNSpec<Generator>,
}

impl CopulaN for RmmN {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn cdf(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let (n, p) = (self.spec.dim(), self.spec.p);
        let gens = &self.spec.generators;
        let f: Vec<f64> = gens.iter().zip(u).map(|(g, &x)| g.f(x)).collect();
        let hats: Vec<f64> = gens.iter().zip(u).map(|(g, &x)| g.f_hat(x)).collect();
        let mut m = f64::INFINITY;
        for j in 0..p {
            for k in p..n {
                m = m.min((u[j] * u[k] - f[j] * f[k]) / (hats[j] * hats[k]));
            }
        }
        if m <= 0.0 {
            return 0.0;
        }
        self.spec.base.at(&hats) * m
    }

    fn label(&self) -> String {
        let gens: Vec<String> = self.spec.generators.iter().map(|g| g.label()).collect();
        format!(
            "rmm_n({}, [{}], p={})",
            self.spec.base.label(),
            gens.join(", "),
            self.spec.p
        )
    }
}

/// n-variate RMM copula; the base is the already-reflected `Ċ`.
pub fn rmm_n(spec: &MMNSpec<Generator>) -> NCopula {
    NCopula::new(RmmN { spec: spec.clone() })
}

struct Rmm3 {
    base: NCopula,
    f: [Generator; 3],
}

impl CopulaN for Rmm3 {
    fn dim(&self) -> usize {
        3
    }

    fn cdf(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let [f1, f2, f3] = &self.f;
        let (a1, a2, a3) = (f1.f(u[0]), f2.f(u[1]), f3.f(u[2]));
        let h = [f1.f_hat(u[0]), f2.f_hat(u[1]), f3.f_hat(u[2])];
        let first = (u[0] * u[1] - a1 * a2) * h[2];
        let second = (u[0] * u[2] - a1 * a3) * h[1];
        let m = first.min(second);
        if m <= 0.0 {
            return 0.0;
        }
        self.base.at(&h) / (h[0] * h[1] * h[2]) * m
    }

    fn label(&self) -> String {
        format!(
            "rmm_3({}, {}, {}, {})",
            self.base.label(),
            self.f[0].label(),
            self.f[1].label(),
            self.f[2].label()
        )
    }
}

/// Trivariate RMM copula with one max-linked and two min-linked coordinates.
pub fn rmm_3(c_dot: &NCopula, f1: &Generator, f2: &Generator, f3: &Generator) -> Result<NCopula> {
    if c_dot.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: c_dot.dim(),
        });
    }
    Ok(NCopula::new(Rmm3 {
        base: c_dot.clone(),
        f: [f1.clone(), f2.clone(), f3.clone()],
    }))
}

/// Worst violations found by [`validate_ncopula`].
#[derive(Debug, Clone, PartialEq)]
pub struct NAxiomReport {
    pub grid_n: usize,
    pub tol: f64,
    pub groundedness: f64,
    pub margins: f64,
    /// Most negative n-box volume over the lattice (0 when none is negative).
    pub min_volume: f64,
}

impl NAxiomReport {
    pub fn passed(&self) -> bool {
        self.groundedness <= self.tol && self.margins <= self.tol && self.min_volume >= -self.tol
    }
}

impl fmt::Display for NAxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(f, "grid {} per axis, tol {:e}", self.grid_n, self.tol)?;
        writeln!(
            f,
            "groundedness  {:<4} worst {:.3e}",
            mark(self.groundedness <= self.tol),
            self.groundedness
        )?;
        writeln!(
            f,
            "margins       {:<4} worst {:.3e}",
            mark(self.margins <= self.tol),
            self.margins
        )?;
        write!(
            f,
            "n-increasing  {:<4} min volume {:.3e}",
            mark(self.min_volume >= -self.tol),
            self.min_volume
        )
    }
}

/// Checks groundedness, uniform margins and nonnegative n-box volumes on the
/// equispaced lattice with `grid_n` points per axis, using raw values.
pub fn validate_ncopula(c: &NCopula, grid_n: usize, tol: f64) -> NAxiomReport {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let n = c.dim();
    let x = |i: usize| {
        if i + 1 == grid_n {
            1.0
        } else {
            i as f64 / (grid_n - 1) as f64
        }
    };
    let total = grid_n.pow(n as u32);
    let mut values = Vec::with_capacity(total);
    let mut point = vec![0.0; n];
    let mut index = vec![0usize; n];
    let mut groundedness: f64 = 0.0;
    let mut margins: f64 = 0.0;
    for flat in 0..total {
        let mut r = flat;
        for d in (0..n).rev() {
            index[d] = r % grid_n;
            r /= grid_n;
            point[d] = x(index[d]);
        }
        let value = c.raw(&point);
        values.push(value);
        if index.contains(&0) {
            groundedness = groundedness.max(value.abs());
        }
        let below: Vec<usize> = (0..n).filter(|&d| index[d] + 1 != grid_n).collect();
        if below.len() == 1 {
            margins = margins.max((value - point[below[0]]).abs());
        }
    }
    let mut min_volume: f64 = 0.0;
    let cells = (grid_n - 1).pow(n as u32);
    for flat in 0..cells {
        let mut r = flat;
        for d in (0..n).rev() {
            index[d] = r % (grid_n - 1);
            r /= grid_n - 1;
        }
        let mut vol = 0.0;
        for corner in 0u32..(1 << n) {
            let mut off = 0;
            for (d, &i) in index.iter().enumerate() {
                off = off * grid_n + i + (corner >> d & 1) as usize;
            }
            // lower corners along an odd number of axes contribute with a minus sign
            let lows = n as u32 - corner.count_ones();
            if lows % 2 == 1 {
                vol -= values[off];
            } else {
                vol += values[off];
            }
        }
        min_volume = min_volume.min(vol);
    }
    NAxiomReport {
        grid_n,
        tol,
        groundedness,
        margins,
        min_volume,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_matches_definition() {
        for &(a, b) in &[
            (0.3f64, 0.1f64),
            (0.3, 0.5),
            (-0.2, 0.4),
            (0.5, -0.5),
            (0.0, 0.0),
        ] {
            let lhs = a.max(0.0) - a.min(b).max(0.0);
            assert!((lhs - clipped_difference(a, b)).abs() <= 1e-15);
        }
    }

    #[test]
    fn spec_checks() {
        let base = NCopula::product(3).unwrap();
        let gens = vec![Generator::zero(); 3];
        assert_eq!(
            MMNSpec::new(base.clone(), gens.clone(), 3).err(),
            Some(Error::MaxCount { p: 3, n: 3 })
        );
        assert!(MMNSpec::new(base.clone(), gens.clone(), 0).is_err());
        assert!(MMNSpec::new(base, vec![Generator::zero(); 2], 1).is_err());
        assert!(NCopula::product(1).is_err());
    }

    #[test]
    fn flip_examples() {
        let m2 = NCopula::min(2).unwrap();
        let w = m2.flip_vars(&[1]).unwrap();
        assert!((w.at(&[0.6, 0.6]) - 0.2).abs() < 1e-15);
        let p3 = NCopula::product(3).unwrap();
        let twice = p3.flip_vars(&[1]).unwrap().flip_vars(&[1]).unwrap();
        assert!((twice.at(&[0.3, 0.5, 0.9]) - 0.135).abs() < 1e-15);
        let f = p3.flip_vars(&[1, 2]).unwrap();
        assert!((f.at(&[0.5, 0.5, 0.5]) - 0.125).abs() < 1e-15);
        assert!(p3.flip_vars(&[]).is_err());
        assert!(p3.flip_vars(&[3]).is_err());
    }

    #[test]
    fn identity_generators_give_base() {
        let base = NCopula::product(3).unwrap();
        let gens = vec![
            MMGenerator::identity(MmKind::F1),
            MMGenerator::identity(MmKind::F2),
            MMGenerator::identity(MmKind::F2),
        ];
        let c = mm_n(&MMNSpec::new(base, gens, 1).unwrap()).unwrap();
        assert!((c.at(&[0.3, 0.6, 0.8]) - 0.144).abs() < 1e-15);
        assert_eq!(c.at(&[0.0, 0.6, 0.8]), 0.0);
    }

    #[test]
    fn wrong_classes_are_rejected() {
        let base = NCopula::product(2).unwrap();
        let gens = vec![
            MMGenerator::identity(MmKind::F1),
            MMGenerator::identity(MmKind::F1),
        ];
        assert!(mm_n(&MMNSpec::new(base, gens, 1).unwrap()).is_err());
    }

    #[test]
    fn zero_set_points() {
        let g = Generator::scaled_complement(0.5).unwrap();
        let base = NCopula::product(3).unwrap();
        let c = rmm_n(&MMNSpec::new(base.clone(), vec![g.clone(); 3], 1).unwrap());
        assert!(c.at(&[0.5, 0.2, 0.5]).abs() < 1e-15);
        assert!((c.at(&[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-15);
        let c3 = rmm_3(&base, &g, &g, &g).unwrap();
        assert_eq!(c3.at(&[0.5, 0.5, 0.1]), 0.0);
        assert!((c3.at(&[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
