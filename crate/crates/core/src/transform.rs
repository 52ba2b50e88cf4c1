//! Bivariate MM and RMM transforms, their closed-form iterates and limits.
//!
//! With `x_k = f̂^(k)(u)` and `y_k = ĝ^(k)(v)` the `n`-th RMM iterate is
//!
//! ```text
//! uv · Ċ(x_n, y_n) / (x_n y_n) · ∏_{k<n} max{0, 1 - f*(x_k) g*(y_k)}
//! ```
//!
//! and the MM side is its image under `flip_second` with `φ = id + f`,
//! `ψ(v) = 1 - ĝ(1 - v)`. The MM evaluators below are written directly in
//! terms of `φ` and `ψ`, so comparing the two paths is a genuine check.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::copula::{BivariateCopula, Copula2};
use crate::error::{Error, Result};
use crate::generator::{validate_g, GenRule, Generator, MMGenerator, MmKind};
use crate::numerics::{truncated_product, PRODUCT_MAX_TERMS};

/// `max{0, 1 - a·b}` with `∞ · 0 = 0`, so a vanishing factor leaves the term at 1.
#[inline]
pub fn shock_factor(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        1.0
    } else {
        (1.0 - a * b).max(0.0)
    }
}

fn check_generator(g: &Generator) -> Result<()> {
    if let GenRule::Custom { .. } = g.rule() {
        let report = validate_g(g, 1001, 1e-9);
        if !report.passed() {
            return Err(Error::Validation(format!(
                "generator {} violates the generator conditions",
                g.label()
            )));
        }
    }
    Ok(())
}

fn check_kinds(phi: &MMGenerator, psi: &MMGenerator) -> Result<()> {
    if phi.kind() != MmKind::F1 {
        return Err(Error::Validation(format!(
            "{} must be of class F1",
            phi.label()
        )));
    }
    if psi.kind() != MmKind::F2 {
        return Err(Error::Validation(format!(
            "{} must be of class F2",
            psi.label()
        )));
    }
    Ok(())
}

/// `(1 - φ*)/φ*`, the RMM star recovered from an F1 star.
#[inline]
fn f_star_of_phi(phi_star: f64) -> f64 {
    if phi_star <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 - phi_star) / phi_star
    }
}

/// `ψ_*/(1 - ψ_*)`, the RMM star recovered from an F2 star.
#[inline]
fn g_star_of_psi(psi_star: f64) -> f64 {
    if psi_star >= 1.0 {
        f64::INFINITY
    } else {
        psi_star / (1.0 - psi_star)
    }
}

struct Rmm {
    base: BivariateCopula,
    f: Generator,
    g: Generator,
}

impl Copula2 for Rmm {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        let s = shock_factor(self.f.f_star(u), self.g.f_star(v));
        if s == 0.0 {
            return 0.0;
        }
        let (x, y) = (self.f.f_hat(u), self.g.f_hat(v));
        u * v * self.base.at(x, y) / (x * y) * s
    }

    fn label(&self) -> String {
        format!(
            "rmm({}, {}, {})",
            self.base.label(),
            self.f.label(),
            self.g.label()
        )
    }
}

/// RMM transform of the already-reflected copula `c_dot`.
pub fn rmm(c_dot: &BivariateCopula, f: &Generator, g: &Generator) -> Result<BivariateCopula> {
    check_generator(f)?;
    check_generator(g)?;
    Ok(BivariateCopula::new(Rmm {
        base: c_dot.clone(),
        f: f.clone(),
        g: g.clone(),
    }))
}

struct Mm {
    base: BivariateCopula,
    phi: MMGenerator,
    psi: MMGenerator,
}

impl Copula2 for Mm {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let d = (self.phi.star(u) - self.psi.star(v)).max(0.0);
        if d == 0.0 {
            return u;
        }
        let (p, q) = (self.phi.eval(u), self.psi.eval(v));
        u + (self.base.at(p, q) - p) * d
    }

    fn label(&self) -> String {
        format!(
            "mm({}, {}, {})",
            self.base.label(),
            self.phi.label(),
            self.psi.label()
        )
    }
}

/// MM transform `u + (C(φ(u), ψ(v)) - φ(u)) · max{0, φ*(u) - ψ_*(v)}`.
pub fn mm(c: &BivariateCopula, phi: &MMGenerator, psi: &MMGenerator) -> Result<BivariateCopula> {
    check_kinds(phi, psi)?;
    Ok(BivariateCopula::new(Mm {
        base: c.clone(),
        phi: phi.clone(),
        psi: psi.clone(),
    }))
}

struct RmmIter {
    base: BivariateCopula,
    f: Generator,
    g: Generator,
    n: usize,
}

impl Copula2 for RmmIter {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        if self.n == 0 {
            return self.base.at(u, v);
        }
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        let (mut x, mut y) = (u, v);
        let mut prod = 1.0;
        for _ in 0..self.n {
            prod *= shock_factor(self.f.f_star(x), self.g.f_star(y));
            if prod == 0.0 {
                return 0.0;
            }
            let (nx, ny) = (self.f.f_hat(x), self.g.f_hat(y));
            if nx == x && ny == y {
                break;
            }
            x = nx;
            y = ny;
        }
        u * v * self.base.at(x, y) / (x * y) * prod
    }

    fn label(&self) -> String {
        format!(
            "rmm_iter({}, {}, {}, {})",
            self.base.label(),
            self.f.label(),
            self.g.label(),
            self.n
        )
    }
}

/// `n`-fold RMM transform in closed form; `n = 0` is `c_dot` itself.
pub fn rmm_iter(
    c_dot: &BivariateCopula,
    f: &Generator,
    g: &Generator,
    n: usize,
) -> Result<BivariateCopula> {
    check_generator(f)?;
    check_generator(g)?;
    Ok(BivariateCopula::new(RmmIter {
        base: c_dot.clone(),
        f: f.clone(),
        g: g.clone(),
        n,
    }))
}

struct MmIter {
    base: BivariateCopula,
    phi: MMGenerator,
    psi: MMGenerator,
    n: usize,
}

impl Copula2 for MmIter {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        if self.n == 0 {
            return self.base.at(u, v);
        }
        if u <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return u;
        }
        let (mut x, mut y) = (u, v);
        let mut prod = 1.0;
        for _ in 0..self.n {
            let a = f_star_of_phi(self.phi.star(x));
            let b = g_star_of_psi(self.psi.star(y));
            prod *= shock_factor(a, b);
            if prod == 0.0 {
                return u;
            }
            x = self.phi.eval(x);
            y = self.psi.eval(y);
        }
        u - u * (1.0 - v) * (x - self.base.at(x, y)) / (x * (1.0 - y)) * prod
    }

    fn label(&self) -> String {
        format!(
            "mm_iter({}, {}, {}, {})",
            self.base.label(),
            self.phi.label(),
            self.psi.label(),
            self.n
        )
    }
}

/// `n`-fold MM transform in closed form; `n = 0` is `c` itself.
pub fn mm_iter(
    c: &BivariateCopula,
    phi: &MMGenerator,
    psi: &MMGenerator,
    n: usize,
) -> Result<BivariateCopula> {
    check_kinds(phi, psi)?;
    Ok(BivariateCopula::new(MmIter {
        base: c.clone(),
        phi: phi.clone(),
        psi: psi.clone(),
        n,
    }))
}

/// Pointwise limit of the RMM iterates.
///
/// The square splits at `α = α(f)` and `β = α(g)`; in the lower-left corner
/// the value carries an infinite product of shock factors along the orbits
/// of `u` and `v`, truncated at `tol`.
#[derive(Clone)]
pub struct RmmLimit {
    base: BivariateCopula,
    f: Generator,
    g: Generator,
    tol: f64,
    max_terms: usize,
}

impl RmmLimit {
    pub fn new(c_dot: &BivariateCopula, f: &Generator, g: &Generator, tol: f64) -> Result<Self> {
        check_generator(f)?;
        check_generator(g)?;
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::Parameter {
                param: "tol",
                value: tol,
                expected: "> 0",
            });
        }
        Ok(Self {
            base: c_dot.clone(),
            f: f.clone(),
            g: g.clone(),
            tol,
            max_terms: PRODUCT_MAX_TERMS,
        })
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms.max(1);
        self
    }

    /// Limit value, or an error when the corner product hits the term cap.
    pub fn try_eval(&self, u: f64, v: f64) -> Result<f64> {
        let (value, converged, terms_used) = self.eval_parts(u, v);
        if converged {
            Ok(value)
        } else {
            Err(Error::ProductNotConverged { terms_used })
        }
    }

    fn eval_parts(&self, u: f64, v: f64) -> (f64, bool, usize) {
        if u <= 0.0 || v <= 0.0 {
            return (0.0, true, 0);
        }
        let (alpha, beta) = (self.f.alpha(), self.g.alpha());
        let c = &self.base;
        let value = match (u >= alpha, v >= beta) {
            (true, true) => c.at(u, v),
            (true, false) => v / beta * c.at(u, beta),
            (false, true) => u / alpha * c.at(alpha, v),
            (false, false) => {
                if self.f.f(u) * self.g.f(v) >= u * v {
                    return (0.0, true, 1);
                }
                let (mut x, mut y) = (u, v);
                let p = truncated_product(
                    |_| {
                        let t = shock_factor(self.f.f_star(x), self.g.f_star(y));
                        x = self.f.f_hat(x);
                        y = self.g.f_hat(y);
                        t
                    },
                    self.tol,
                    self.max_terms,
                );
                let value = u * v * c.at(alpha, beta) / (alpha * beta) * p.value;
                return (value, p.converged, p.terms_used);
            }
        };
        (value, true, 0)
    }

    pub fn into_copula(self) -> BivariateCopula {
        BivariateCopula::new(self)
    }
}

impl Copula2 for RmmLimit {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.eval_parts(u, v).0
    }

    fn label(&self) -> String {
        format!(
            "rmm_limit({}, {}, {})",
            self.base.label(),
            self.f.label(),
            self.g.label()
        )
    }
}

/// Limit copula of the RMM iteration; see [`RmmLimit`] for fallible evaluation.
pub fn rmm_limit(
    c_dot: &BivariateCopula,
    f: &Generator,
    g: &Generator,
    tol: f64,
) -> Result<BivariateCopula> {
    Ok(RmmLimit::new(c_dot, f, g, tol)?.into_copula())
}

/// Pointwise limit of the MM iterates, split at `α` (from `φ`) and `1 - β`
/// (from `ψ`).
#[derive(Clone)]
pub struct MmLimit {
    base: BivariateCopula,
    phi: MMGenerator,
    psi: MMGenerator,
    tol: f64,
    max_terms: usize,
}

impl MmLimit {
    pub fn new(
        c: &BivariateCopula,
        phi: &MMGenerator,
        psi: &MMGenerator,
        tol: f64,
    ) -> Result<Self> {
        check_kinds(phi, psi)?;
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::Parameter {
                param: "tol",
                value: tol,
                expected: "> 0",
            });
        }
        Ok(Self {
            base: c.clone(),
            phi: phi.clone(),
            psi: psi.clone(),
            tol,
            max_terms: PRODUCT_MAX_TERMS,
        })
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms.max(1);
        self
    }

    pub fn try_eval(&self, u: f64, v: f64) -> Result<f64> {
        let (value, converged, terms_used) = self.eval_parts(u, v);
        if converged {
            Ok(value)
        } else {
            Err(Error::ProductNotConverged { terms_used })
        }
    }

    fn eval_parts(&self, u: f64, v: f64) -> (f64, bool, usize) {
        if u <= 0.0 {
            return (0.0, true, 0);
        }
        if v >= 1.0 {
            return (u, true, 0);
        }
        let alpha = self.phi.fixed_point();
        let cut = 1.0 - self.psi.fixed_point();
        let c = &self.base;
        let value = match (u >= alpha, v <= cut) {
            (true, true) => c.at(u, v),
            (false, true) => u / alpha * c.at(alpha, v),
            (true, false) => u - (1.0 - v) / (1.0 - cut) * (u - c.at(u, cut)),
            (false, false) => {
                if self.phi.star(u) <= self.psi.star(v) {
                    return (u, true, 1);
                }
                let beta = 1.0 - cut;
                let (mut x, mut y) = (u, v);
                let p = truncated_product(
                    |_| {
                        let a = f_star_of_phi(self.phi.star(x));
                        let b = g_star_of_psi(self.psi.star(y));
                        x = self.phi.eval(x);
                        y = self.psi.eval(y);
                        shock_factor(a, b)
                    },
                    self.tol,
                    self.max_terms,
                );
                let value =
                    u - u * (1.0 - v) * (alpha - c.at(alpha, cut)) / (alpha * beta) * p.value;
                return (value, p.converged, p.terms_used);
            }
        };
        (value, true, 0)
    }

    pub fn into_copula(self) -> BivariateCopula {
        BivariateCopula::new(self)
    }
}

impl Copula2 for MmLimit {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.eval_parts(u, v).0
    }

    fn label(&self) -> String {
        format!(
            "mm_limit({}, {}, {})",
            self.base.label(),
            self.phi.label(),
            self.psi.label()
        )
    }
}

/// Limit copula of the MM iteration.
pub fn mm_limit(
    c: &BivariateCopula,
    phi: &MMGenerator,
    psi: &MMGenerator,
    tol: f64,
) -> Result<BivariateCopula> {
    Ok(MmLimit::new(c, phi, psi, tol)?.into_copula())
}

/// Sup-distance between the RMM iterates `n = 0..=n_max` and the limit on
/// an equispaced `grid_n x grid_n` grid.
pub fn limit_distances(
    c_dot: &BivariateCopula,
    f: &Generator,
    g: &Generator,
    n_max: usize,
    grid_n: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let limit = RmmLimit::new(c_dot, f, g, tol)?;
    let step = 1.0 / (grid_n.max(2) - 1) as f64;
    let mut points = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        for j in 0..grid_n {
            let (u, v) = (i as f64 * step, j as f64 * step);
            points.push((u, v, limit.try_eval(u.min(1.0), v.min(1.0))?));
        }
    }
    (0..=n_max)
        .map(|n| {
            let it = rmm_iter(c_dot, f, g, n)?;
            Ok(points
                .iter()
                .map(|&(u, v, l)| (it.at(u.min(1.0), v.min(1.0)) - l).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}
