//! Generating functions of the reflected maxmin transform and their maxmin
//! counterparts.
//!
//! An RMM generator `f` carries the auxiliaries
//!
//! ```text
//! f*(u) = f(u) / u        f̂(u) = u + f(u)
//! ```
//!
//! and the fixed-point parameter `α`, the smallest `u` with `f ≡ 0` on `[u, 1]`.
//! The maxmin side works with `φ ∈ F1` (first coordinate, max-linked) and
//! `ψ ∈ F2` (second coordinate, min-linked), related to `f`, `g` by
//! `f(u) = φ(u) - u` and `g(v) = 1 - v - ψ(1 - v)`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
// inherent float methods shadow these whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Values of `|f|` at or below this count as zero when scanning for `α`.
const ZERO_TOL: f64 = 1e-15;
/// Grid used for `α` scans and class checks of closure-backed generators.
const SCAN_GRID: usize = 1001;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum GenRule {
    /// `f ≡ 0`
    Zero,
    /// `f(u) = u^(1-a) - u`, `a ∈ (0, 1)`
    Power { a: f64 },
    /// `f(u) = c (1 - u)`, `c ∈ (0, 1]`
    ScaledComplement { c: f64 },
    /// `f(u) = c u (1 - u)`, `c ∈ (0, 1]`
    Quadratic { c: f64 },
    /// `f(u) = min(u, 1 - u)`
    Tent,
    /// `f(u) = c max(0, s - u)`, `c, s ∈ (0, 1]`
    TruncLinear { c: f64, s: f64 },
    /// Piecewise linear through `(x, f(x))` knots spanning `[0, 1]`.
    Tabulated(Arc<[(f64, f64)]>),
    /// Arbitrary closure; validated on demand by [`validate_g`].
    Custom { name: String, f: ScalarFn },
}

impl fmt::Debug for GenRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl GenRule {
    fn label(&self) -> String {
        match self {
            GenRule::Zero => String::from("zero"),
            GenRule::Power { a } => format!("power({a})"),
            GenRule::ScaledComplement { c } => format!("scaled_complement({c})"),
            GenRule::Quadratic { c } => format!("quadratic({c})"),
            GenRule::Tent => String::from("tent"),
            GenRule::TruncLinear { c, s } => format!("trunc_linear({c},{s})"),
            GenRule::Tabulated(k) => format!("tabulated({} knots)", k.len()),
            GenRule::Custom { name, .. } => name.clone(),
        }
    }
}

#[derive(Clone)]
pub struct Generator {
    rule: GenRule,
    alpha: f64,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Generator({}, alpha={})", self.rule.label(), self.alpha)
    }
}

fn open_unit(param: &'static str, x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(Error::Parameter {
            param,
            value: x,
            expected: "(0, 1)",
        })
    }
}

fn half_open_unit(param: &'static str, x: f64) -> Result<f64> {
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err(Error::Parameter {
            param,
            value: x,
            expected: "(0, 1]",
        })
    }
}

impl Generator {
    pub fn zero() -> Self {
        Self {
            rule: GenRule::Zero,
            alpha: 0.0,
        }
    }

    pub fn power(a: f64) -> Result<Self> {
        let a = open_unit("a", a)?;
        Ok(Self {
            rule: GenRule::Power { a },
            alpha: 1.0,
        })
    }

    pub fn scaled_complement(c: f64) -> Result<Self> {
        let c = half_open_unit("c", c)?;
        Ok(Self {
            rule: GenRule::ScaledComplement { c },
            alpha: 1.0,
        })
    }

    pub fn quadratic(c: f64) -> Result<Self> {
        let c = half_open_unit("c", c)?;
        Ok(Self {
            rule: GenRule::Quadratic { c },
            alpha: 1.0,
        })
    }

    pub fn tent() -> Self {
        Self {
            rule: GenRule::Tent,
            alpha: 1.0,
        }
    }

    pub fn trunc_linear(c: f64, s: f64) -> Result<Self> {
        let c = half_open_unit("c", c)?;
        let s = half_open_unit("s", s)?;
        Ok(Self {
            rule: GenRule::TruncLinear { c, s },
            alpha: s,
        })
    }

    /// Piecewise-linear generator through `knots`, which must start at `x = 0`,
    /// end at `(1, 0)`, and satisfy the monotonicity conditions at knots and
    /// midpoints.
    pub fn tabulated(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Validation(String::from(
                "tabulated generator needs at least two knots",
            )));
        }
        if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(Error::Validation(String::from("knots must span [0, 1]")));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Validation(String::from(
                "knot abscissae must increase strictly",
            )));
        }
        if knots[knots.len() - 1].1 != 0.0 {
            return Err(Error::Validation(String::from("f(1) must be 0")));
        }
        let knots: Arc<[(f64, f64)]> = knots.into();
        let mut gen = Self {
            rule: GenRule::Tabulated(knots.clone()),
            alpha: 1.0,
        };
        let mut points: Vec<f64> = Vec::with_capacity(2 * knots.len());
        for w in knots.windows(2) {
            points.push(w[0].0);
            points.push(0.5 * (w[0].0 + w[1].0));
        }
        points.push(1.0);
        let mut prev_hat = f64::NEG_INFINITY;
        let mut prev_star = f64::INFINITY;
        for &x in &points {
            let fx = gen.f(x);
            let hat = x + fx;
            if fx < 0.0 || !(0.0..=1.0).contains(&hat) {
                return Err(Error::Validation(format!(
                    "f̂({x}) = {hat} leaves [0, 1] or f < 0"
                )));
            }
            if hat < prev_hat {
                return Err(Error::Validation(format!("f̂ decreases at {x}")));
            }
            prev_hat = hat;
            if x > 0.0 {
                let star = fx / x;
                if star > prev_star {
                    return Err(Error::Validation(format!("f* increases at {x}")));
                }
                prev_star = star;
            }
        }
        gen.alpha = compute_alpha(&gen, SCAN_GRID);
        Ok(gen)
    }

    /// Generator from an arbitrary closure. No conditions are enforced here;
    /// run [`validate_g`] on the result. `α` is located by a grid scan.
    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: &str, f: F) -> Self {
        let mut gen = Self {
            rule: GenRule::Custom {
                name: String::from(name),
                f: Arc::new(f),
            },
            alpha: 1.0,
        };
        gen.alpha = compute_alpha(&gen, SCAN_GRID);
        gen
    }

    pub fn rule(&self) -> &GenRule {
        &self.rule
    }

    pub fn label(&self) -> String {
        self.rule.label()
    }

    /// Fixed-point parameter: smallest `u` with `f ≡ 0` on `[u, 1]`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.rule, GenRule::Zero)
    }

    pub fn f(&self, u: f64) -> f64 {
        match &self.rule {
            GenRule::Zero => 0.0,
            GenRule::Power { a } => u.powf(1.0 - a) - u,
            GenRule::ScaledComplement { c } => c * (1.0 - u),
            GenRule::Quadratic { c } => c * u * (1.0 - u),
            GenRule::Tent => u.min(1.0 - u),
            GenRule::TruncLinear { c, s } => c * (s - u).max(0.0),
            GenRule::Tabulated(knots) => interpolate(knots, u),
            GenRule::Custom { f, .. } => f(u),
        }
    }

    /// `f*(u) = f(u)/u`; at `u = 0` the right limit, `+∞` when `f(0) > 0`.
    pub fn f_star(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.f_star_at_zero();
        }
        match &self.rule {
            GenRule::Zero => 0.0,
            GenRule::Power { a } => (u.powf(-a) - 1.0).max(0.0),
            GenRule::ScaledComplement { c } => c * (1.0 - u) / u,
            GenRule::Quadratic { c } => c * (1.0 - u),
            GenRule::Tent => {
                if u <= 0.5 {
                    1.0
                } else {
                    (1.0 - u) / u
                }
            }
            _ => self.f(u) / u,
        }
    }

    fn f_star_at_zero(&self) -> f64 {
        if self.f(0.0) > 0.0 {
            return f64::INFINITY;
        }
        match &self.rule {
            GenRule::Zero => 0.0,
            GenRule::Power { .. } => f64::INFINITY,
            GenRule::Quadratic { c } => *c,
            GenRule::Tent => 1.0,
            GenRule::Tabulated(knots) => knots[1].1 / knots[1].0,
            _ => {
                let eps = 1e-12;
                self.f(eps) / eps
            }
        }
    }

    /// `f̂(u) = u + f(u)`.
    pub fn f_hat(&self, u: f64) -> f64 {
        match &self.rule {
            GenRule::Zero => u,
            GenRule::Power { a } => u.powf(1.0 - a),
            _ => (u + self.f(u)).clamp(0.0, 1.0),
        }
    }

    /// `n`-fold composition of `f̂`; `f̂^(0)` is the identity.
    pub fn f_hat_iter(&self, u: f64, n: usize) -> f64 {
        let mut x = u;
        for _ in 0..n {
            let next = self.f_hat(x);
            if next == x {
                break;
            }
            x = next;
        }
        x
    }

    /// Pointwise limit of `f̂^(n)(u)`.
    pub fn f_hat_limit(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u < self.alpha {
            self.alpha
        } else {
            u
        }
    }

    /// `f(0)` when it is nonzero: tolerated, but outside the grounded class.
    pub fn f_at_zero_exception(&self) -> Option<f64> {
        let f0 = self.f(0.0);
        (f0 != 0.0).then_some(f0)
    }
}

fn interpolate(knots: &[(f64, f64)], u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let idx = knots.partition_point(|k| k.0 <= u);
    if idx == 0 {
        return knots[0].1;
    }
    if idx >= knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (x0, y0) = knots[idx - 1];
    let (x1, y1) = knots[idx];
    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
}

/// Locates `α` by scanning an equispaced grid downward from 1 and bisecting
/// the last sign change of `f`.
pub fn compute_alpha(gen: &Generator, grid_n: usize) -> f64 {
    let grid_n = grid_n.max(2);
    let is_zero = |x: f64| gen.f(x).abs() <= ZERO_TOL;
    let step = 1.0 / (grid_n - 1) as f64;
    let mut first_zero = grid_n - 1;
    while first_zero > 0 && is_zero(first_zero as f64 * step) {
        first_zero -= 1;
    }
    if first_zero == 0 && is_zero(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (
        first_zero as f64 * step,
        ((first_zero + 1) as f64 * step).min(1.0),
    );
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if is_zero(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorReport {
    pub grid_n: usize,
    pub tol: f64,
    /// `|f(1)|`
    pub f_one: f64,
    /// `|f*(1)|`
    pub f_star_one: f64,
    /// Largest drop of `f̂` between neighbouring grid points.
    pub hat_decrease: f64,
    /// Largest rise of `f*` between neighbouring grid points of `(0, 1]`.
    pub star_increase: f64,
    /// Largest excursion of `f̂` outside `[0, 1]` or of `f` below 0.
    pub range_excursion: f64,
    /// Nonzero `f(0)`, recorded as an exception rather than a failure.
    pub f_zero_exception: Option<f64>,
}

impl GeneratorReport {
    pub fn passed(&self) -> bool {
        self.f_one <= self.tol
            && self.f_star_one <= self.tol
            && self.hat_decrease <= self.tol
            && self.star_increase <= self.tol
            && self.range_excursion <= self.tol
    }
}

/// Checks the boundary, monotonicity and range conditions on a grid.
pub fn validate_g(gen: &Generator, grid_n: usize, tol: f64) -> GeneratorReport {
    assert!(grid_n >= 3, "grid_n must be at least 3");
    let step = 1.0 / (grid_n - 1) as f64;
    let x = |i: usize| {
        if i + 1 == grid_n {
            1.0
        } else {
            i as f64 * step
        }
    };
    let mut hat_decrease: f64 = 0.0;
    let mut star_increase: f64 = 0.0;
    let mut range_excursion: f64 = 0.0;
    let mut prev_hat = x(0) + gen.f(x(0));
    let mut prev_star = f64::NAN;
    for i in 0..grid_n {
        let u = x(i);
        let fu = gen.f(u);
        let hat = u + fu;
        range_excursion = range_excursion.max(-fu).max(-hat).max(hat - 1.0);
        if i > 0 {
            hat_decrease = hat_decrease.max(prev_hat - hat);
            let star = fu / u;
            if !prev_star.is_nan() {
                star_increase = star_increase.max(star - prev_star);
            }
            prev_star = star;
        }
        prev_hat = hat;
    }
    GeneratorReport {
        grid_n,
        tol,
        f_one: gen.f(1.0).abs(),
        f_star_one: gen.f(1.0).abs(),
        hat_decrease,
        star_increase,
        range_excursion,
        f_zero_exception: gen.f_at_zero_exception(),
    }
}

/// Which maxmin class a generating function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmKind {
    /// `φ`: nondecreasing, `φ(0) = 0`, `φ(1) = 1`, `id/φ` nondecreasing.
    F1,
    /// `ψ`: nondecreasing, `ψ(0) = 0`, `ψ(1) = 1`, `ψ_*` nondecreasing.
    F2,
}

#[derive(Clone)]
pub enum MmRule {
    Identity,
    /// `φ(u) = u^e` in F1, `ψ(v) = 1 - (1-v)^e` in F2; `e ∈ (0, 1]`.
    Power {
        exponent: f64,
    },
    /// The maxmin function induced by an RMM generator.
    Reflected(Generator),
    Custom {
        name: String,
        f: ScalarFn,
    },
}

#[derive(Clone)]
pub struct MMGenerator {
    kind: MmKind,
    rule: MmRule,
    /// `α` of the induced RMM generator (`β` for F2).
    fixed_point: f64,
}

impl fmt::Debug for MMGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MMGenerator({:?}, {})", self.kind, self.label())
    }
}

impl MMGenerator {
    pub fn identity(kind: MmKind) -> Self {
        Self {
            kind,
            rule: MmRule::Identity,
            fixed_point: 0.0,
        }
    }

    pub fn power(kind: MmKind, exponent: f64) -> Result<Self> {
        let exponent = half_open_unit("exponent", exponent)?;
        if exponent == 1.0 {
            return Ok(Self::identity(kind));
        }
        Ok(Self {
            kind,
            rule: MmRule::Power { exponent },
            fixed_point: 1.0,
        })
    }

    /// Closure-backed generator; rejected when it violates its class on a grid.
    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        kind: MmKind,
        name: &str,
        f: F,
    ) -> Result<Self> {
        let mut gen = Self {
            kind,
            rule: MmRule::Custom {
                name: String::from(name),
                f: Arc::new(f),
            },
            fixed_point: 1.0,
        };
        check_mm_class(&gen, SCAN_GRID, 1e-12)?;
        gen.fixed_point = match kind {
            MmKind::F1 => from_mm(&gen)?.alpha(),
            MmKind::F2 => from_mm_psi(&gen)?.alpha(),
        };
        Ok(gen)
    }

    pub fn kind(&self) -> MmKind {
        self.kind
    }

    pub fn rule(&self) -> &MmRule {
        &self.rule
    }

    pub fn label(&self) -> String {
        let inner = match &self.rule {
            MmRule::Identity => String::from("identity"),
            MmRule::Power { exponent } => format!("power^{exponent}"),
            MmRule::Reflected(g) => format!("from({})", g.label()),
            MmRule::Custom { name, .. } => name.clone(),
        };
        match self.kind {
            MmKind::F1 => format!("phi[{inner}]"),
            MmKind::F2 => format!("psi[{inner}]"),
        }
    }

    /// `α` (F1) or `β` (F2) of the induced RMM generator.
    pub fn fixed_point(&self) -> f64 {
        self.fixed_point
    }

    pub fn eval(&self, x: f64) -> f64 {
        match (&self.rule, self.kind) {
            (MmRule::Identity, _) => x,
            (MmRule::Power { exponent }, MmKind::F1) => x.powf(*exponent),
            (MmRule::Power { exponent }, MmKind::F2) => 1.0 - (1.0 - x).powf(*exponent),
            (MmRule::Reflected(g), MmKind::F1) => g.f_hat(x),
            (MmRule::Reflected(g), MmKind::F2) => 1.0 - g.f_hat(1.0 - x),
            (MmRule::Custom { f, .. }, _) => f(x),
        }
    }

    /// `φ*(u) = u/φ(u)` for F1, `ψ_*(v) = (v - ψ(v))/(1 - ψ(v))` for F2.
    pub fn star(&self, x: f64) -> f64 {
        match self.kind {
            MmKind::F1 => self.phi_star(x),
            MmKind::F2 => self.psi_star(x),
        }
    }

    fn phi_star(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return match &self.rule {
                MmRule::Identity => 1.0,
                MmRule::Power { exponent } => {
                    if *exponent < 1.0 {
                        0.0
                    } else {
                        1.0
                    }
                }
                MmRule::Reflected(g) => 1.0 / (1.0 + g.f_star(0.0)),
                MmRule::Custom { .. } => {
                    if self.eval(0.0) > 0.0 {
                        0.0
                    } else {
                        let eps = 1e-12;
                        eps / self.eval(eps)
                    }
                }
            };
        }
        match &self.rule {
            MmRule::Identity => 1.0,
            MmRule::Power { exponent } => u.powf(1.0 - exponent),
            MmRule::Reflected(g) => u / g.f_hat(u),
            MmRule::Custom { .. } => u / self.eval(u),
        }
    }

    fn psi_star(&self, v: f64) -> f64 {
        if v >= 1.0 {
            return 1.0;
        }
        match &self.rule {
            MmRule::Identity => 0.0,
            MmRule::Reflected(g) => {
                let w = 1.0 - v;
                let hat = g.f_hat(w);
                if hat <= 0.0 {
                    1.0
                } else {
                    g.f(w) / hat
                }
            }
            _ => {
                let psi = self.eval(v);
                if psi >= 1.0 {
                    1.0
                } else {
                    (v - psi) / (1.0 - psi)
                }
            }
        }
    }

    /// `n`-fold composition.
    pub fn iterate(&self, x: f64, n: usize) -> f64 {
        let mut x = x;
        for _ in 0..n {
            let next = self.eval(x);
            if next == x {
                break;
            }
            x = next;
        }
        x
    }

    /// Pointwise limit of the iterates.
    pub fn limit(&self, x: f64) -> f64 {
        let p = self.fixed_point;
        match self.kind {
            MmKind::F1 => {
                if x <= 0.0 {
                    0.0
                } else if x < p {
                    p
                } else {
                    x
                }
            }
            MmKind::F2 => {
                if x >= 1.0 {
                    1.0
                } else if x > 1.0 - p {
                    1.0 - p
                } else {
                    x
                }
            }
        }
    }
}

fn check_mm_class(gen: &MMGenerator, grid_n: usize, tol: f64) -> Result<()> {
    let fail = |what: &str| {
        Err(Error::Validation(format!(
            "{} violates {:?}: {what}",
            gen.label(),
            gen.kind
        )))
    };
    if gen.eval(0.0).abs() > tol {
        return fail("value at 0 must be 0");
    }
    if (gen.eval(1.0) - 1.0).abs() > tol {
        return fail("value at 1 must be 1");
    }
    let step = 1.0 / (grid_n - 1) as f64;
    let mut prev = gen.eval(0.0);
    let mut prev_star = f64::NEG_INFINITY;
    for i in 1..grid_n {
        let x = if i + 1 == grid_n {
            1.0
        } else {
            i as f64 * step
        };
        let y = gen.eval(x);
        if y < prev - tol || !(-tol..=1.0 + tol).contains(&y) {
            return fail("must be nondecreasing into [0, 1]");
        }
        prev = y;
        let star = gen.star(x);
        if star < prev_star - tol {
            return fail("auxiliary function must be nondecreasing");
        }
        prev_star = star;
    }
    Ok(())
}

/// RMM generator of a first-coordinate maxmin function: `f(u) = φ(u) - u`.
pub fn from_mm(phi: &MMGenerator) -> Result<Generator> {
    if phi.kind != MmKind::F1 {
        return Err(Error::Validation(String::from(
            "from_mm expects an F1 generator",
        )));
    }
    match &phi.rule {
        MmRule::Identity => Ok(Generator::zero()),
        MmRule::Power { exponent } => Generator::power(1.0 - exponent),
        MmRule::Reflected(g) => Ok(g.clone()),
        MmRule::Custom { name, f } => {
            let f = f.clone();
            Ok(Generator::from_fn(&format!("from_mm({name})"), move |u| {
                f(u) - u
            }))
        }
    }
}

/// RMM generator of a second-coordinate maxmin function:
/// `g(v) = 1 - v - ψ(1 - v)`.
pub fn from_mm_psi(psi: &MMGenerator) -> Result<Generator> {
    if psi.kind != MmKind::F2 {
        return Err(Error::Validation(String::from(
            "from_mm_psi expects an F2 generator",
        )));
    }
    match &psi.rule {
        MmRule::Identity => Ok(Generator::zero()),
        MmRule::Power { exponent } => Generator::power(1.0 - exponent),
        MmRule::Reflected(g) => Ok(g.clone()),
        MmRule::Custom { name, f } => {
            let f = f.clone();
            Ok(Generator::from_fn(
                &format!("from_mm_psi({name})"),
                move |v| 1.0 - v - f(1.0 - v),
            ))
        }
    }
}

/// Maxmin function of class `kind` induced by an RMM generator.
pub fn to_mm(gen: &Generator, kind: MmKind) -> MMGenerator {
    let rule = match gen.rule {
        GenRule::Zero => MmRule::Identity,
        GenRule::Power { a } => MmRule::Power { exponent: 1.0 - a },
        _ => MmRule::Reflected(gen.clone()),
    };
    MMGenerator {
        kind,
        rule,
        fixed_point: gen.alpha,
    }
}
