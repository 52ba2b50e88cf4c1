use rmm_core::measures::{
    compute_cell, estimate_measures, kendall_tau, spearman_rho, tail_coefficients, CellSpec,
    Iterations, MeasureKind, TableBase, TAIL_SEQUENCE,
};
use rmm_core::sampling::sample2;
use rmm_core::transform::{rmm, rmm_limit};
use rmm_core::{BivariateCopula, Generator};

const TOL: f64 = 1e-4;

fn builtins() -> Vec<BivariateCopula> {
    vec![
        BivariateCopula::independence(),
        BivariateCopula::upper(),
        BivariateCopula::lower(),
        BivariateCopula::efgm(1.0).unwrap(),
        BivariateCopula::efgm(-0.4).unwrap(),
        BivariateCopula::clayton(-0.7).unwrap(),
        BivariateCopula::clayton(2.0).unwrap(),
    ]
}

#[test]
fn reflection_flips_the_sign() {
    for c in builtins() {
        let (r, rf) = (
            spearman_rho(&c, TOL).value,
            spearman_rho(&c.flip_second(), TOL).value,
        );
        let (t, tf) = (
            kendall_tau(&c, TOL).value,
            kendall_tau(&c.flip_second(), TOL).value,
        );
        assert!(
            (r + rf).abs() <= 2.0 * TOL,
            "{}: rho {r} vs {rf}",
            c.label()
        );
        assert!(
            (t + tf).abs() <= 2.0 * TOL,
            "{}: tau {t} vs {tf}",
            c.label()
        );
    }
}

#[test]
fn measures_lie_in_range() {
    let f = Generator::power(0.9).unwrap();
    let mut all = builtins();
    all.push(rmm(&BivariateCopula::upper(), &f, &f).unwrap());
    all.push(rmm_limit(&BivariateCopula::lower(), &f, &f, 1e-12).unwrap());
    for c in all {
        for m in [spearman_rho(&c, 1e-7), kendall_tau(&c, 1e-7)] {
            assert!(m.value.abs() <= 1.0 + 1e-6, "{}: {m}", c.label());
        }
    }
}

#[test]
fn closed_form_values() {
    // EFGM: ρ = θ/3, τ = 2θ/9; Clayton(θ > 0): τ = θ/(θ+2)
    for theta in [-1.0, 0.5] {
        let c = BivariateCopula::efgm(theta).unwrap();
        assert!((spearman_rho(&c, TOL).value - theta / 3.0).abs() <= TOL);
        assert!((kendall_tau(&c, TOL).value - 2.0 * theta / 9.0).abs() <= TOL);
    }
    let c = BivariateCopula::clayton(2.0).unwrap();
    assert!((kendall_tau(&c, TOL).value - 0.5).abs() <= 1e-3);
    let c = BivariateCopula::clayton(-0.7).unwrap();
    assert!((kendall_tau(&c, TOL).value + 0.7 / 1.3).abs() <= 1e-3);
    assert!((spearman_rho(&c, TOL).value + 0.6844).abs() <= 1e-3);
}

#[test]
fn tail_coefficients_of_bounds() {
    let (l, u) = tail_coefficients(&BivariateCopula::upper(), &TAIL_SEQUENCE);
    assert!((l.value - 1.0).abs() < 1e-9 && (u.value - 1.0).abs() < 1e-9);
    let (l, u) = tail_coefficients(&BivariateCopula::independence(), &TAIL_SEQUENCE);
    assert!(l.value.abs() < 1e-4 && u.value.abs() < 1e-4);
    let z = Generator::zero();
    let lim = rmm_limit(&BivariateCopula::lower(), &z, &z, 1e-12).unwrap();
    let (l, u) = tail_coefficients(&lim, &TAIL_SEQUENCE);
    assert!(l.value.abs() < 1e-9 && u.value.abs() < 1e-9);
}

fn assert_within_three_se(c: &BivariateCopula, seed: u64) {
    let batch = sample2(c, 100_000, seed).unwrap();
    let (rho_mc, tau_mc) = estimate_measures(&batch).unwrap();
    let rho = spearman_rho(c, TOL);
    let tau = kendall_tau(c, TOL);
    let rho_band = 3.0 * rho_mc.error_estimate + rho.error_estimate;
    let tau_band = 3.0 * tau_mc.error_estimate + tau.error_estimate;
    assert!(
        (rho.value - rho_mc.value).abs() <= rho_band,
        "{}: {rho} vs {rho_mc}",
        c.label()
    );
    assert!(
        (tau.value - tau_mc.value).abs() <= tau_band,
        "{}: {tau} vs {tau_mc}",
        c.label()
    );
}

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let f = Generator::power(0.5).unwrap();
    let fixtures = [
        BivariateCopula::independence(),
        BivariateCopula::efgm(-1.0).unwrap(),
        rmm(&BivariateCopula::independence(), &f, &f).unwrap(),
    ];
    for (k, c) in fixtures.iter().enumerate() {
        assert_within_three_se(c, 1000 + k as u64);
    }
    let batch = sample2(&fixtures[2], 100_000, 77).unwrap();
    let (rho_mc, _) = estimate_measures(&batch).unwrap();
    assert!((rho_mc.value + 0.2952).abs() <= 0.02, "{rho_mc}");
}

#[test]
fn table_columns_stabilize() {
    for base in [
        TableBase::Pi,
        TableBase::M,
        TableBase::W,
        TableBase::Clayton(-0.7),
    ] {
        let cell = |n| {
            compute_cell(
                &CellSpec {
                    base,
                    a: 0.9,
                    b: 0.9,
                    n: Iterations::Finite(n),
                    kind: MeasureKind::Rho,
                },
                TOL,
            )
            .unwrap()
            .value
        };
        let (c3, c4) = (cell(3), cell(4));
        assert!((c3 - c4).abs() <= 1e-3, "{}: {c3} vs {c4}", base.label());
    }
}
