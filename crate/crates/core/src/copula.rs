//! Bivariate copulas as shareable evaluator trees.
//!
//! A [`Copula2`] implementation supplies the raw formula. [`BivariateCopula`]
//! wraps it in an `Arc`, clamps evaluations into the Fréchet–Hoeffding band
//! and exposes the flips, rectangle volumes and axiom checks.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
// inherent float methods shadow these whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{unit, Error, Result};

/// Raw evaluator of a bivariate copula on `[0, 1]^2`.
pub trait Copula2: Send + Sync {
    /// Unclamped value at `(u, v)`; callers guarantee `u, v ∈ [0, 1]`.
    fn cdf(&self, u: f64, v: f64) -> f64;

    /// Human-readable provenance of the construction.
    fn label(&self) -> String;
}

#[derive(Clone)]
pub struct BivariateCopula(Arc<dyn Copula2>);

impl fmt::Debug for BivariateCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BivariateCopula({})", self.label())
    }
}

impl<C: Copula2 + 'static> From<C> for BivariateCopula {
    fn from(c: C) -> Self {
        Self(Arc::new(c))
    }
}

/// Clamps `c` into `[max(0, u+v-1), min(u, v)]`.
#[inline]
pub fn frechet_clamp(c: f64, u: f64, v: f64) -> f64 {
    let lo = (u + v - 1.0).max(0.0);
    let hi = u.min(v);
    if c.is_nan() {
        return lo;
    }
    c.max(lo).min(hi)
}

impl BivariateCopula {
    pub fn new<C: Copula2 + 'static>(c: C) -> Self {
        Self(Arc::new(c))
    }

    /// Domain-checked evaluation, clamped into the Fréchet band.
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        let u = unit("u", u)?;
        let v = unit("v", v)?;
        Ok(self.at(u, v))
    }

    /// Clamped evaluation without the domain check.
    #[inline]
    pub fn at(&self, u: f64, v: f64) -> f64 {
        frechet_clamp(self.0.cdf(u, v), u, v)
    }

    /// The evaluator's own value, with no clamping.
    #[inline]
    pub fn raw(&self, u: f64, v: f64) -> f64 {
        self.0.cdf(u, v)
    }

    pub fn label(&self) -> String {
        self.0.label()
    }

    /// Diagonal section `δ(t) = C(t, t)`.
    pub fn diagonal(&self, t: f64) -> f64 {
        self.at(t, t)
    }

    /// `Ċ(u, v) = u - C(u, 1-v)`.
    pub fn flip_second(&self) -> Self {
        Self::new(FlipSecond(self.clone()))
    }

    /// `C̃(u, v) = v - C(1-u, v)`.
    pub fn flip_first(&self) -> Self {
        Self::new(FlipFirst(self.clone()))
    }

    pub fn volume(&self, rect: &Rectangle) -> f64 {
        self.at(rect.u_hi, rect.v_hi)
            - self.at(rect.u_hi, rect.v_lo)
            - self.at(rect.u_lo, rect.v_hi)
            + self.at(rect.u_lo, rect.v_lo)
    }

    pub fn independence() -> Self {
        Self::new(Independence)
    }

    /// Upper Fréchet–Hoeffding bound `M(u, v) = min(u, v)`.
    pub fn upper() -> Self {
        Self::new(Upper)
    }

    /// Lower Fréchet–Hoeffding bound `W(u, v) = max(0, u+v-1)`.
    pub fn lower() -> Self {
        Self::new(Lower)
    }

    /// Eyraud–Farlie–Gumbel–Morgenstern copula, `θ ∈ [-1, 1]`.
    pub fn efgm(theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta) {
            return Err(Error::Parameter {
                param: "theta",
                value: theta,
                expected: "[-1, 1]",
            });
        }
        Ok(Self::new(Efgm { theta }))
    }

    /// Clayton copula, `θ ∈ [-1, ∞) \ {0}`.
    pub fn clayton(theta: f64) -> Result<Self> {
        if !(theta >= -1.0 && theta != 0.0 && theta.is_finite()) {
            return Err(Error::Parameter {
                param: "theta",
                value: theta,
                expected: "[-1, inf) without 0",
            });
        }
        Ok(Self::new(Clayton { theta }))
    }

    /// Constructor by family name: `pi`, `m`, `w`, `efgm`, `clayton`.
    pub fn builtin(name: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Dimension {
                    expected: n,
                    got: params.len(),
                })
            }
        };
        match name {
            "pi" | "product" => need(0).map(|_| Self::independence()),
            "m" | "upper" => need(0).map(|_| Self::upper()),
            "w" | "lower" => need(0).map(|_| Self::lower()),
            "efgm" => need(1).and_then(|_| Self::efgm(params[0])),
            "clayton" => need(1).and_then(|_| Self::clayton(params[0])),
            _ => Err(Error::Validation(format!("unknown copula family `{name}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub u_lo: f64,
    pub u_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Rectangle {
    pub fn new(u_lo: f64, u_hi: f64, v_lo: f64, v_hi: f64) -> Result<Self> {
        for (what, x) in [
            ("u_lo", u_lo),
            ("u_hi", u_hi),
            ("v_lo", v_lo),
            ("v_hi", v_hi),
        ] {
            unit(what, x)?;
        }
        if u_lo > u_hi || v_lo > v_hi {
            return Err(Error::Validation(String::from(
                "rectangle corners out of order",
            )));
        }
        Ok(Self {
            u_lo,
            u_hi,
            v_lo,
            v_hi,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Independence;
impl Copula2 for Independence {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        u * v
    }
    fn label(&self) -> String {
        String::from("pi")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Upper;
impl Copula2 for Upper {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        u.min(v)
    }
    fn label(&self) -> String {
        String::from("m")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Lower;
impl Copula2 for Lower {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        (u + v - 1.0).max(0.0)
    }
    fn label(&self) -> String {
        String::from("w")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Efgm {
    theta: f64,
}
impl Copula2 for Efgm {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        u * v + self.theta * u * (1.0 - u) * v * (1.0 - v)
    }
    fn label(&self) -> String {
        format!("efgm({})", self.theta)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Clayton {
    theta: f64,
}
impl Copula2 for Clayton {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        let t = self.theta;
        let s = u.powf(-t) + v.powf(-t) - 1.0;
        if s <= 0.0 {
            0.0
        } else {
            s.powf(-1.0 / t)
        }
    }
    fn label(&self) -> String {
        format!("clayton({})", self.theta)
    }
}

struct FlipSecond(BivariateCopula);
impl Copula2 for FlipSecond {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        u - self.0.at(u, 1.0 - v)
    }
    fn label(&self) -> String {
        format!("flip2({})", self.0.label())
    }
}

struct FlipFirst(BivariateCopula);
impl Copula2 for FlipFirst {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        v - self.0.at(1.0 - u, v)
    }
    fn label(&self) -> String {
        format!("flip1({})", self.0.label())
    }
}

/// Worst violations found by [`validate_copula`].
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub grid_n: usize,
    pub tol: f64,
    /// `max |C(u,0)|, |C(0,v)|`.
    pub groundedness: f64,
    /// `max |C(u,1) - u|, |C(1,v) - v|`.
    pub margins: f64,
    /// Most negative cell volume (0 when all are nonnegative).
    pub min_volume: f64,
}

impl AxiomReport {
    pub fn grounded(&self) -> bool {
        self.groundedness <= self.tol
    }
    pub fn uniform_margins(&self) -> bool {
        self.margins <= self.tol
    }
    pub fn two_increasing(&self) -> bool {
        self.min_volume >= -self.tol
    }
    pub fn passed(&self) -> bool {
        self.grounded() && self.uniform_margins() && self.two_increasing()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(
            f,
            "grid {}x{}, tol {:e}",
            self.grid_n, self.grid_n, self.tol
        )?;
        writeln!(
            f,
            "groundedness  {:<4} worst {:.3e}",
            mark(self.grounded()),
            self.groundedness
        )?;
        writeln!(
            f,
            "margins       {:<4} worst {:.3e}",
            mark(self.uniform_margins()),
            self.margins
        )?;
        write!(
            f,
            "2-increasing  {:<4} min volume {:.3e}",
            mark(self.two_increasing()),
            self.min_volume
        )
    }
}

/// Checks the copula axioms on the equispaced `grid_n x grid_n` grid using the
/// unclamped evaluator, so clamping cannot mask a violation.
pub fn validate_copula(c: &BivariateCopula, grid_n: usize, tol: f64) -> AxiomReport {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let step = 1.0 / (grid_n - 1) as f64;
    let x = |i: usize| {
        if i + 1 == grid_n {
            1.0
        } else {
            i as f64 * step
        }
    };
    let mut values = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        for j in 0..grid_n {
            values.push(c.raw(x(i), x(j)));
        }
    }
    let at = |i: usize, j: usize| values[i * grid_n + j];
    let last = grid_n - 1;
    let mut groundedness: f64 = 0.0;
    let mut margins: f64 = 0.0;
    for i in 0..grid_n {
        groundedness = groundedness.max(at(i, 0).abs()).max(at(0, i).abs());
        margins = margins
            .max((at(i, last) - x(i)).abs())
            .max((at(last, i) - x(i)).abs());
    }
    let mut min_volume: f64 = 0.0;
    for i in 0..last {
        for j in 0..last {
            let vol = at(i + 1, j + 1) - at(i + 1, j) - at(i, j + 1) + at(i, j);
            min_volume = min_volume.min(vol);
        }
    }
    AxiomReport {
        grid_n,
        tol,
        groundedness,
        margins,
        min_volume,
    }
}

/// A copula from a closure; the building block for ad-hoc test functions.
pub struct FnCopula<F> {
    f: F,
    label: String,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> FnCopula<F> {
    pub fn new(label: &str, f: F) -> Self {
        Self {
            f,
            label: String::from(label),
        }
    }
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Copula2 for FnCopula<F> {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        (self.f)(u, v)
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}
