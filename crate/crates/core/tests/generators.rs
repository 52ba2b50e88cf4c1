use proptest::prelude::*;
use rmm_core::generator::{compute_alpha, from_mm, from_mm_psi, to_mm, validate_g};
use rmm_core::numerics::{invert_monotone, truncated_product};
use rmm_core::{Generator, MMGenerator, MmKind};

fn family() -> impl Strategy<Value = Generator> {
    prop_oneof![
        Just(Generator::zero()),
        Just(Generator::tent()),
        (0.01..0.99f64).prop_map(|a| Generator::power(a).unwrap()),
        (0.01..=1.0f64).prop_map(|c| Generator::scaled_complement(c).unwrap()),
        (0.01..=1.0f64).prop_map(|c| Generator::quadratic(c).unwrap()),
        (0.01..=1.0f64, 0.05..=1.0f64).prop_map(|(c, s)| Generator::trunc_linear(c, s).unwrap()),
    ]
}

proptest! {
    #[test]
    fn families_satisfy_the_generator_conditions(g in family()) {
        prop_assert!(validate_g(&g, 501, 1e-12).passed());
    }

    #[test]
    fn hat_iterates_increase_in_n(g in family(), u in 0.0..=1.0f64, n in 0usize..30) {
        prop_assert!(g.f_hat_iter(u, n + 1) >= g.f_hat_iter(u, n));
        prop_assert!(g.f_hat_iter(u, n) <= g.f_hat_limit(u) + 1e-15);
    }

    #[test]
    fn closed_form_power_iterates(a in 0.01..0.99f64, u in 0.0..=1.0f64, n in 0usize..8) {
        let g = Generator::power(a).unwrap();
        let exact = u.powf((1.0 - a).powi(n as i32));
        prop_assert!((g.f_hat_iter(u, n) - exact).abs() <= 1e-14);
    }

    #[test]
    fn alpha_scan_agrees_with_closed_form(g in family()) {
        prop_assert!((compute_alpha(&g, 1001) - g.alpha()).abs() <= 1e-9);
    }

    #[test]
    fn mm_round_trip(g in family(), u in 0.0..=1.0f64) {
        let back1 = from_mm(&to_mm(&g, MmKind::F1)).unwrap();
        let back2 = from_mm_psi(&to_mm(&g, MmKind::F2)).unwrap();
        prop_assert!((back1.f(u) - g.f(u)).abs() <= 1e-12);
        prop_assert!((back2.f(u) - g.f(u)).abs() <= 1e-12);
    }

    #[test]
    fn maxmin_functions_stay_in_their_class(g in family(), x in 0.0..1.0f64, dx in 0.0..0.5f64) {
        let y = (x + dx).min(1.0);
        for kind in [MmKind::F1, MmKind::F2] {
            let m = to_mm(&g, kind);
            prop_assert!(m.eval(y) >= m.eval(x) - 1e-15);
            prop_assert!(m.star(y) >= m.star(x) - 1e-12);
        }
    }

    #[test]
    fn inversion_is_a_left_inverse(p in 0.2..5.0f64, x in 0.0..=1.0f64) {
        let f = |t: f64| t.powf(p);
        prop_assert!(invert_monotone(f, f(x), 1e-12) <= x + 1e-12);
    }

    #[test]
    fn truncated_product_decreases_with_more_terms(r in 0.05..0.9f64, m in 1usize..60) {
        let term = |k: usize| 1.0 - r.powi(k as i32 + 1);
        let short = truncated_product(term, 0.0, m);
        let long = truncated_product(term, 0.0, m + 1);
        prop_assert!(long.value <= short.value);
        prop_assert!((0.0..=1.0).contains(&long.value));
    }
}

#[test]
fn custom_power_matches_family() {
    let phi = MMGenerator::from_fn(MmKind::F1, "u^0.3", |u: f64| u.powf(0.3)).unwrap();
    let g = from_mm(&phi).unwrap();
    let fam = Generator::power(0.7).unwrap();
    for i in 0..=200 {
        let u = i as f64 / 200.0;
        assert!((g.f(u) - fam.f(u)).abs() < 1e-15);
    }
    assert!((g.alpha() - 1.0).abs() < 1e-9);
}
