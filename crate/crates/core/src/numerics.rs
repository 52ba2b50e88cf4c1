//! Numeric kernels shared by the transforms, measures and samplers.
//!
//! * [`integrate2d`]: tensor Gauss–Legendre on the unit square with adaptive
//!   dyadic refinement, driven by a max-heap of per-cell error estimates.
//! * [`central_diff`] / [`backward_diff`]: finite differences on `[0, 1]` with
//!   one-sided fallback at the edges.
//! * [`invert_monotone`]: leftmost generalized inverse of a nondecreasing map,
//!   by bisection. Jumps of the map become atoms of the inverse.
//! * [`truncated_product`]: partial products of terms in `[0, 1]`.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
// inherent float methods shadow these whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Default finite-difference step on the unit interval.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Default stopping tolerance of [`truncated_product`].
pub const PRODUCT_TOL: f64 = 1e-12;
/// Default term cap of [`truncated_product`].
pub const PRODUCT_MAX_TERMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Absolute error estimate; exceeds the requested tolerance when the cell
    /// budget ran out first.
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub fn within(&self, tol: f64) -> bool {
        self.error_estimate <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductResult {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre
    /// three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Tensor rule over the square `[x0, x0+size] x [y0, y0+size]`.
    fn square<F: Fn(f64, f64) -> f64>(&self, f: &F, x0: f64, y0: f64, size: f64) -> f64 {
        let half = 0.5 * size;
        let mut total = 0.0;
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let x = x0 + half * (1.0 + xi);
            let mut row = 0.0;
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                row += wj * f(x, y0 + half * (1.0 + yj));
            }
            total += wi * row;
        }
        total * half * half
    }
}

/// Value and derivative of the degree-`n` Legendre polynomial at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Points per axis of the base rule. The error estimate is the larger
    /// difference to the rules of half and three quarters of the order, so a
    /// kink inside a cell cannot cancel out of both comparisons at once.
    pub order: usize,
    pub tol: f64,
    /// Upper bound on the number of live cells.
    pub max_cells: usize,
    /// The square is first cut into `2^initial_depth` cells per axis.
    pub initial_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            order: 32,
            tol: 1e-8,
            max_cells: 20_000,
            initial_depth: 1,
        }
    }
}

struct Cell {
    x0: f64,
    y0: f64,
    size: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over `[0, 1]^2` to absolute tolerance `tol` with the default
/// 32-point tensor rule.
pub fn integrate2d<F: Fn(f64, f64) -> f64>(f: F, tol: f64) -> QuadratureResult {
    integrate2d_with(
        f,
        &QuadratureOptions {
            tol,
            ..QuadratureOptions::default()
        },
    )
}

pub fn integrate2d_with<F: Fn(f64, f64) -> f64>(
    f: F,
    opts: &QuadratureOptions,
) -> QuadratureResult {
    assert!(opts.tol > 0.0, "quadrature tolerance must be positive");
    let high = GaussLegendre::new(opts.order.max(2));
    let low = GaussLegendre::new((opts.order / 2).max(1));
    let mid = GaussLegendre::new((3 * opts.order / 4).max(1));
    let per_cell = high.len().pow(2) + low.len().pow(2) + mid.len().pow(2);
    let mut evaluations = 0;

    let mut estimate = |x0: f64, y0: f64, size: f64| {
        let hi = high.square(&f, x0, y0, size);
        let lo = low.square(&f, x0, y0, size);
        let md = mid.square(&f, x0, y0, size);
        evaluations += per_cell;
        Cell {
            x0,
            y0,
            size,
            value: hi,
            err: (hi - lo).abs().max((hi - md).abs()),
        }
    };

    let split = 1usize << opts.initial_depth;
    let size = 1.0 / split as f64;
    let mut heap = BinaryHeap::with_capacity(split * split);
    for i in 0..split {
        for j in 0..split {
            heap.push(estimate(i as f64 * size, j as f64 * size, size));
        }
    }

    let mut total_err: f64 = heap.iter().map(|c| c.err).sum();
    while total_err > opts.tol && heap.len() + 3 <= opts.max_cells {
        let Some(worst) = heap.pop() else { break };
        let half = 0.5 * worst.size;
        let mut child_err = 0.0;
        for (dx, dy) in [(0.0, 0.0), (half, 0.0), (0.0, half), (half, half)] {
            let child = estimate(worst.x0 + dx, worst.y0 + dy, half);
            child_err += child.err;
            heap.push(child);
        }
        total_err += child_err - worst.err;
        if worst.size < 1e-12 {
            break;
        }
    }

    // Re-sum to shed the drift of the running totals; small cells first.
    let mut cells = heap.into_vec();
    cells.sort_unstable_by(|a, b| a.value.abs().total_cmp(&b.value.abs()));
    let value = cells.iter().map(|c| c.value).sum();
    let error_estimate = cells.iter().map(|c| c.err).sum();
    QuadratureResult {
        value,
        error_estimate,
        evaluations,
    }
}

/// Central difference of `f` at `x` on the domain `[0, 1]`; falls back to a
/// one-sided difference when `x ± h` leaves the domain.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    if x - h < 0.0 {
        (f(x + h) - f(x)) / h
    } else if x + h > 1.0 {
        (f(x) - f(x - h)) / h
    } else {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }
}

/// Left difference quotient `(f(x) - f(x-h)) / h`, forward at the left edge.
///
/// For a nondecreasing `f` with `f(x) = 0` the quotient is exactly zero, which
/// keeps conditional distributions from leaking mass into zero sets.
pub fn backward_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    if x - h < 0.0 {
        (f((x + h).min(1.0)) - f(x)) / h
    } else {
        (f(x) - f(x - h)) / h
    }
}

/// Leftmost `x` in `[0, 1]` with `f(x) >= t`, located by bisection to within
/// `tol`. Targets below `f(0)` give 0; targets above `f(1)` give 1.
pub fn invert_monotone<F: FnMut(f64) -> f64>(mut f: F, t: f64, tol: f64) -> f64 {
    if f(0.0) >= t {
        return 0.0;
    }
    if f(1.0) < t {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Multiplies `term(0) * term(1) * ...` with terms in `[0, 1]`.
///
/// Stops after the first term with `1 - term < tol`, after a zero term (the
/// product is then exactly 0), or after `max_terms` terms, in which case
/// `converged` is false. Terms are requested in order, so `term` may carry
/// state such as an orbit of iterates.
pub fn truncated_product<F: FnMut(usize) -> f64>(
    mut term: F,
    tol: f64,
    max_terms: usize,
) -> ProductResult {
    let mut value = 1.0;
    for k in 0..max_terms {
        let t = term(k).clamp(0.0, 1.0);
        if t == 0.0 {
            return ProductResult {
                value: 0.0,
                terms_used: k + 1,
                converged: true,
            };
        }
        value *= t;
        if 1.0 - t < tol {
            return ProductResult {
                value,
                terms_used: k + 1,
                converged: true,
            };
        }
    }
    ProductResult {
        value,
        terms_used: max_terms,
        converged: false,
    }
}
