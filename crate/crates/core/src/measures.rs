//! Concordance and tail measures, quadrant dependence, and the power-generator
//! table lattice.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
// inherent float methods shadow these whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::copula::BivariateCopula;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::numerics::{central_diff, integrate2d, DEFAULT_STEP};
use crate::sampling::SampleBatch;
use crate::transform::{rmm_iter, rmm_limit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Rho,
    Tau,
    LambdaL,
    LambdaU,
}

impl MeasureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Rho => "rho",
            MeasureKind::Tau => "tau",
            MeasureKind::LambdaL => "lambda_L",
            MeasureKind::LambdaU => "lambda_U",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for MeasureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(MeasureKind::Rho),
            "tau" => Ok(MeasureKind::Tau),
            "lambda_L" | "lambda_l" => Ok(MeasureKind::LambdaL),
            "lambda_U" | "lambda_u" => Ok(MeasureKind::LambdaU),
            other => Err(Error::Validation(alloc::format!(
                "unknown measure '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    FiniteDifference,
    MonteCarlo,
    LimitExtrapolation,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::FiniteDifference => "finite-difference",
            Method::MonteCarlo => "monte-carlo",
            Method::LimitExtrapolation => "limit-extrapolation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureReport {
    pub kind: MeasureKind,
    pub value: f64,
    pub error_estimate: f64,
    pub method: Method,
}

impl fmt::Display for MeasureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{:.6},{:.3e},{}",
            self.kind,
            self.value,
            self.error_estimate,
            self.method.as_str()
        )
    }
}

/// Spearman's `ρ = 12 ∬ C - 3`, with `tol` the target absolute error in `ρ`.
pub fn spearman_rho(c: &BivariateCopula, tol: f64) -> MeasureReport {
    let q = integrate2d(|u, v| c.at(u, v), tol / 12.0);
    MeasureReport {
        kind: MeasureKind::Rho,
        value: 12.0 * q.value - 3.0,
        error_estimate: 12.0 * q.error_estimate,
        method: Method::Quadrature,
    }
}

/// Kendall's `τ = 1 - 4 ∬ C_u C_v` with central-difference partials clamped
/// to `[0, 1]`; `tol` is the target absolute error in `τ`.
pub fn kendall_tau(c: &BivariateCopula, tol: f64) -> MeasureReport {
    let h = DEFAULT_STEP;
    let q = integrate2d(
        |u, v| {
            let cu = central_diff(|x| c.at(x, v), u, h).clamp(0.0, 1.0);
            let cv = central_diff(|y| c.at(u, y), v, h).clamp(0.0, 1.0);
            cu * cv
        },
        tol / 4.0,
    );
    MeasureReport {
        kind: MeasureKind::Tau,
        value: 1.0 - 4.0 * q.value,
        error_estimate: 4.0 * q.error_estimate,
        method: Method::FiniteDifference,
    }
}

pub const TAIL_SEQUENCE: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

/// Lower and upper tail coefficients from the diagonal section, evaluated at
/// `t` and `1 - t` for each `t` in `t_sequence` (decreasing to 0). The last
/// value is reported; the spread of the last two is the error estimate.
pub fn tail_coefficients(
    c: &BivariateCopula,
    t_sequence: &[f64],
) -> (MeasureReport, MeasureReport) {
    assert!(!t_sequence.is_empty(), "t_sequence must not be empty");
    let lower: Vec<f64> = t_sequence.iter().map(|&t| c.diagonal(t) / t).collect();
    let upper: Vec<f64> = t_sequence
        .iter()
        .map(|&t| {
            let s = 1.0 - t;
            (1.0 - 2.0 * s + c.diagonal(s)) / t
        })
        .collect();
    let report = |kind, xs: &[f64]| {
        let last = xs[xs.len() - 1];
        let spread = if xs.len() > 1 {
            (last - xs[xs.len() - 2]).abs()
        } else {
            0.0
        };
        MeasureReport {
            kind,
            value: last.clamp(0.0, 1.0),
            error_estimate: spread,
            method: Method::LimitExtrapolation,
        }
    };
    (
        report(MeasureKind::LambdaL, &lower),
        report(MeasureKind::LambdaU, &upper),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrantClass {
    Pqd,
    Nqd,
    Neither,
}

impl QuadrantClass {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadrantClass::Pqd => "PQD",
            QuadrantClass::Nqd => "NQD",
            QuadrantClass::Neither => "NEITHER",
        }
    }
}

/// Compares `C` with `Π` on the equispaced grid. A copula within `tol` of
/// `Π` everywhere is reported as PQD.
pub fn quadrant_class(c: &BivariateCopula, grid_n: usize, tol: f64) -> QuadrantClass {
    assert!(grid_n >= 3, "grid_n must be at least 3");
    let (mut above, mut below) = (true, true);
    for i in 1..grid_n - 1 {
        for j in 1..grid_n - 1 {
            let (u, v) = (
                i as f64 / (grid_n - 1) as f64,
                j as f64 / (grid_n - 1) as f64,
            );
            let d = c.at(u, v) - u * v;
            above &= d >= -tol;
            below &= d <= tol;
        }
    }
    match (above, below) {
        (true, _) => QuadrantClass::Pqd,
        (false, true) => QuadrantClass::Nqd,
        (false, false) => QuadrantClass::Neither,
    }
}

/// Starting copulas of the table lattice, each reporting the `Ċ` it feeds to
/// the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableBase {
    Pi,
    M,
    W,
    Clayton(f64),
}

impl TableBase {
    pub fn label(&self) -> String {
        match self {
            TableBase::Pi => String::from("pi"),
            TableBase::M => String::from("m"),
            TableBase::W => String::from("w"),
            TableBase::Clayton(t) => alloc::format!("clayton({t})"),
        }
    }

    /// The copula the iteration starts from: the reflection of Π, M and W,
    /// and the Clayton copula itself, whose reported column is
    /// `ρ = -0.6844`, `τ = -0.5385`.
    pub fn reflected(&self) -> Result<BivariateCopula> {
        Ok(match self {
            TableBase::Pi => BivariateCopula::independence(),
            TableBase::M => BivariateCopula::lower(),
            TableBase::W => BivariateCopula::upper(),
            TableBase::Clayton(t) => BivariateCopula::clayton(*t)?,
        })
    }
}

impl core::str::FromStr for TableBase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi" => Ok(TableBase::Pi),
            "m" => Ok(TableBase::M),
            "w" => Ok(TableBase::W),
            "clayton" => Ok(TableBase::Clayton(-0.7)),
            other => Err(Error::Validation(alloc::format!(
                "unknown table base '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iterations {
    Finite(usize),
    Limit,
}

impl fmt::Display for Iterations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Iterations::Finite(n) => write!(f, "{n}"),
            Iterations::Limit => f.write_str("inf"),
        }
    }
}

/// Coordinates of one table entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub base: TableBase,
    pub a: f64,
    pub b: f64,
    pub n: Iterations,
    pub kind: MeasureKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub base: String,
    pub a: f64,
    pub b: f64,
    pub n: Iterations,
    pub kind: MeasureKind,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub bases: Vec<TableBase>,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub n_values: Vec<Iterations>,
    pub kind: MeasureKind,
    pub tol: f64,
}

impl TableConfig {
    /// Four bases, `a, b ∈ {0.1, 0.5, 0.9}` and `n = 0..=4`.
    pub fn standard(kind: MeasureKind) -> Self {
        Self {
            bases: alloc::vec![
                TableBase::Pi,
                TableBase::M,
                TableBase::W,
                TableBase::Clayton(-0.7)
            ],
            a_values: alloc::vec![0.1, 0.5, 0.9],
            b_values: alloc::vec![0.1, 0.5, 0.9],
            n_values: (0..=4).map(Iterations::Finite).collect(),
            kind,
            tol: 1e-4,
        }
    }

    /// Cells in row order: base, then `a`, then `b`, then `n`.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::new();
        for &base in &self.bases {
            for &a in &self.a_values {
                for &b in &self.b_values {
                    for &n in &self.n_values {
                        out.push(CellSpec {
                            base,
                            a,
                            b,
                            n,
                            kind: self.kind,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Measure of the `n`-th RMM iterate of the cell's base under
/// `f(u) = u^(1-a) - u`, `g(v) = v^(1-b) - v`.
pub fn compute_cell(cell: &CellSpec, tol: f64) -> Result<TableCell> {
    let c_dot = cell.base.reflected()?;
    let f = Generator::power(cell.a)?;
    let g = Generator::power(cell.b)?;
    let copula = match cell.n {
        Iterations::Finite(n) => rmm_iter(&c_dot, &f, &g, n)?,
        Iterations::Limit => rmm_limit(&c_dot, &f, &g, 1e-12)?,
    };
    let report = match cell.kind {
        MeasureKind::Rho => spearman_rho(&copula, tol),
        MeasureKind::Tau => kendall_tau(&copula, tol),
        MeasureKind::LambdaL => tail_coefficients(&copula, &TAIL_SEQUENCE).0,
        MeasureKind::LambdaU => tail_coefficients(&copula, &TAIL_SEQUENCE).1,
    };
    Ok(TableCell {
        base: cell.base.label(),
        a: cell.a,
        b: cell.b,
        n: cell.n,
        kind: cell.kind,
        value: report.value,
        error: report.error_estimate,
    })
}

/// Computes every cell in order; a failing cell leaves its error in place and
/// the run continues.
pub fn table_run(config: &TableConfig) -> Vec<Result<TableCell>> {
    config
        .cells()
        .iter()
        .map(|c| compute_cell(c, config.tol))
        .collect()
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut out = alloc::vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

fn rank_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSample("a coordinate is constant"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Counts inversions of `ys` while merge-sorting it.
fn merge_count(ys: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = ys.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps =
        merge_count(&mut ys[..mid], &mut buf[..mid]) + merge_count(&mut ys[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if ys[j] < ys[i] {
            buf[k] = ys[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = ys[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&ys[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&ys[j..n]);
    ys.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's `τ_b` in `O(n log n)` (Knight's algorithm).
fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tie_pairs(&xs);
    let mut n3 = 0u64;
    let mut run = 1u64;
    for k in 1..n {
        if xs[k] == xs[k - 1] && ys[k] == ys[k - 1] {
            run += 1;
        } else {
            n3 += run * (run - 1) / 2;
            run = 1;
        }
    }
    n3 += run * (run - 1) / 2;

    let mut buf = alloc::vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tie_pairs(&ys);
    let denom = ((n0 - n1) as f64) * ((n0 - n2) as f64);
    if denom == 0.0 {
        return Err(Error::DegenerateSample("all pairs tied in a coordinate"));
    }
    let numer = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    Ok(numer / denom.sqrt())
}

/// Standard error from `batches` contiguous batch estimates.
fn batch_se<F: Fn(&[f64], &[f64]) -> Result<f64>>(
    x: &[f64],
    y: &[f64],
    batches: usize,
    stat: F,
) -> f64 {
    let size = x.len() / batches;
    let vals: Vec<f64> = (0..batches)
        .filter_map(|b| stat(&x[b * size..(b + 1) * size], &y[b * size..(b + 1) * size]).ok())
        .collect();
    if vals.len() < 2 {
        return f64::NAN;
    }
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    // a batch of size n/B has B times the variance of the full sample
    (var / m).sqrt()
}

/// Sample Spearman `ρ` and Kendall `τ_b` of the first two coordinates, with
/// batch-means standard errors.
pub fn estimate_measures(batch: &SampleBatch) -> Result<(MeasureReport, MeasureReport)> {
    let n = batch.len();
    if n < 100 {
        return Err(Error::DegenerateSample("at least 100 points are required"));
    }
    let x: Vec<f64> = batch.points().map(|p| p[0]).collect();
    let y: Vec<f64> = batch.points().map(|p| p[1]).collect();
    let rho = rank_correlation(&x, &y)?;
    let tau = kendall_tau_b(&x, &y)?;
    let batches = (n / 50).min(20);
    let report = |kind, value, error_estimate| MeasureReport {
        kind,
        value,
        error_estimate,
        method: Method::MonteCarlo,
    };
    Ok((
        report(
            MeasureKind::Rho,
            rho,
            batch_se(&x, &y, batches, rank_correlation),
        ),
        report(
            MeasureKind::Tau,
            tau,
            batch_se(&x, &y, batches, kendall_tau_b),
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::rmm;

    fn brute_tau(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                let s = (x[i] - x[j]) * (y[i] - y[j]);
                if x[i] == x[j] && y[i] == y[j] {
                    continue;
                } else if x[i] == x[j] {
                    tx += 1;
                } else if y[i] == y[j] {
                    ty += 1;
                } else if s > 0.0 {
                    conc += 1;
                } else {
                    disc += 1;
                }
            }
        }
        let c = (conc - disc) as f64;
        c / (((conc + disc + tx) as f64) * ((conc + disc + ty) as f64)).sqrt()
    }

    #[test]
    fn knight_matches_brute_force_with_ties() {
        let x = [0.1, 0.4, 0.4, 0.2, 0.9, 0.9, 0.3, 0.5, 0.5, 0.7];
        let y = [0.3, 0.3, 0.8, 0.1, 0.5, 0.5, 0.2, 0.9, 0.1, 0.6];
        assert!((kendall_tau_b(&x, &y).unwrap() - brute_tau(&x, &y)).abs() < 1e-15);
    }

    #[test]
    fn rank_correlation_of_monotone_data() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yr: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((rank_correlation(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!((rank_correlation(&x, &yr).unwrap() + 1.0).abs() < 1e-15);
        assert!(rank_correlation(&x, &[1.0; 50]).is_err());
    }

    #[test]
    fn rho_examples() {
        let pi = BivariateCopula::independence();
        assert!(spearman_rho(&pi, 1e-8).value.abs() < 1e-8);
        let clayton = BivariateCopula::clayton(-0.7).unwrap();
        assert!((spearman_rho(&clayton, 1e-5).value + 0.6844).abs() < 0.005);
        let p = Generator::power(0.5).unwrap();
        let c = rmm_iter(&pi, &p, &p, 1).unwrap();
        assert!((spearman_rho(&c, 1e-5).value + 0.2952).abs() < 0.005);
    }

    #[test]
    fn tau_examples() {
        let w = BivariateCopula::upper().flip_second();
        assert!((kendall_tau(&w, 1e-4).value + 1.0).abs() < 0.01);
        let p = Generator::power(0.5).unwrap();
        let c = rmm_iter(&BivariateCopula::lower(), &p, &p, 1).unwrap();
        assert!((kendall_tau(&c, 1e-4).value + 0.3333).abs() < 0.01);
        let c = rmm_iter(&BivariateCopula::upper(), &p, &p, 1).unwrap();
        assert!(kendall_tau(&c, 1e-4).value.abs() < 0.01);
    }

    #[test]
    fn tail_examples() {
        let (l, u) = tail_coefficients(&BivariateCopula::upper(), &TAIL_SEQUENCE);
        assert!((l.value - 1.0).abs() < 1e-9 && (u.value - 1.0).abs() < 1e-9);
        let (l, u) = tail_coefficients(&BivariateCopula::independence(), &TAIL_SEQUENCE);
        assert!(l.value < 1e-4 && u.value < 1e-4);
        let z = Generator::zero();
        let lim = rmm_limit(&BivariateCopula::lower(), &z, &z, 1e-12).unwrap();
        let (l, u) = tail_coefficients(&lim, &TAIL_SEQUENCE);
        assert_eq!((l.value, u.value), (0.0, 0.0));
    }

    #[test]
    fn quadrant_examples() {
        assert_eq!(
            quadrant_class(&BivariateCopula::upper(), 21, 1e-12),
            QuadrantClass::Pqd
        );
        assert_eq!(
            quadrant_class(&BivariateCopula::independence(), 21, 1e-12),
            QuadrantClass::Pqd
        );
        let q = Generator::quadratic(1.0).unwrap();
        let c = rmm(&BivariateCopula::independence(), &q, &q).unwrap();
        assert_eq!(quadrant_class(&c, 101, 1e-12), QuadrantClass::Nqd);
    }

    #[test]
    fn table_cell_examples() {
        let cell = |base, a, b, n, kind| {
            compute_cell(
                &CellSpec {
                    base,
                    a,
                    b,
                    n: Iterations::Finite(n),
                    kind,
                },
                1e-5,
            )
            .unwrap()
            .value
        };
        assert!((cell(TableBase::Pi, 0.9, 0.9, 4, MeasureKind::Rho) + 0.8646).abs() < 0.01);
        assert!((cell(TableBase::W, 0.1, 0.1, 0, MeasureKind::Rho) - 1.0).abs() < 0.002);
        assert!(
            (cell(TableBase::Clayton(-0.7), 0.9, 0.1, 2, MeasureKind::Tau) + 0.0902).abs() < 0.01
        );
    }

    #[test]
    fn standard_lattice_has_180_cells() {
        let cfg = TableConfig::standard(MeasureKind::Rho);
        assert_eq!(cfg.cells().len(), 180);
        assert_eq!(cfg.cells()[0].base, TableBase::Pi);
        assert_eq!(cfg.cells()[179].n, Iterations::Finite(4));
    }
}
