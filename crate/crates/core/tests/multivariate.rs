use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rmm_core::generator::to_mm;
use rmm_core::multivariate::{clipped_difference, mm_n, rmm_3, rmm_n, validate_ncopula, CopulaN};
use rmm_core::transform::{mm, rmm};
use rmm_core::{BivariateCopula, Generator, MMNSpec, MmKind, NCopula};

fn random_point(rng: &mut Xoshiro256PlusPlus, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn mixed_generators(n: usize) -> Vec<Generator> {
    let pool = [
        Generator::scaled_complement(0.5).unwrap(),
        Generator::power(0.4).unwrap(),
        Generator::quadratic(1.0).unwrap(),
        Generator::tent(),
        Generator::trunc_linear(0.5, 2.0 / 3.0).unwrap(),
    ];
    (0..n).map(|i| pool[i % pool.len()].clone()).collect()
}

fn mm_generators(gens: &[Generator], p: usize) -> Vec<rmm_core::MMGenerator> {
    gens.iter()
        .enumerate()
        .map(|(i, g)| to_mm(g, if i < p { MmKind::F1 } else { MmKind::F2 }))
        .collect()
}

#[test]
fn trivariate_formula_matches_general_formula() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    for gens in [
        vec![Generator::scaled_complement(0.5).unwrap(); 3],
        mixed_generators(3),
    ] {
        for base in [
            NCopula::product(3).unwrap(),
            NCopula::min(3).unwrap().flip_vars(&[1, 2]).unwrap(),
        ] {
            let general = rmm_n(&MMNSpec::new(base.clone(), gens.clone(), 1).unwrap());
            let special = rmm_3(&base, &gens[0], &gens[1], &gens[2]).unwrap();
            for _ in 0..1000 {
                let u = random_point(&mut rng, 3);
                assert!((general.at(&u) - special.at(&u)).abs() <= 1e-12, "{u:?}");
            }
        }
    }
}

#[test]
fn rmm_n_is_the_flipped_mm_n() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    for (n, p) in [(3, 1), (3, 2), (4, 2), (4, 1), (4, 3)] {
        let gens = mixed_generators(n);
        let mins: Vec<usize> = (p..n).collect();
        for base in [NCopula::product(n).unwrap(), NCopula::min(n).unwrap()] {
            let c_dot = base.flip_vars(&mins).unwrap();
            let reflected = rmm_n(&MMNSpec::new(c_dot, gens.clone(), p).unwrap());
            let maxmin =
                mm_n(&MMNSpec::new(base.clone(), mm_generators(&gens, p), p).unwrap()).unwrap();
            let flipped = maxmin.flip_vars(&mins).unwrap();
            for _ in 0..200 {
                let u = random_point(&mut rng, n);
                let (a, b) = (reflected.at(&u), flipped.at(&u));
                assert!(
                    (a - b).abs() <= 1e-10,
                    "n={n} p={p} {}: {u:?} {a} vs {b}",
                    base.label()
                );
            }
        }
    }
}

#[test]
fn two_dimensional_cases_reduce_to_bivariate_transforms() {
    let f = Generator::power(0.5).unwrap();
    let g = Generator::quadratic(1.0).unwrap();
    let pi = BivariateCopula::independence();
    let spec = MMNSpec::new(NCopula::product(2).unwrap(), vec![f.clone(), g.clone()], 1).unwrap();
    let a = rmm_n(&spec).at(&[0.3, 0.8]);
    let b = rmm(&pi, &f, &g).unwrap().at(0.3, 0.8);
    assert!((a - b).abs() <= 1e-12);

    let phi = to_mm(&f, MmKind::F1);
    let psi = to_mm(&Generator::zero(), MmKind::F2);
    let spec = MMNSpec::new(
        NCopula::product(2).unwrap(),
        vec![phi.clone(), psi.clone()],
        1,
    )
    .unwrap();
    let a = mm_n(&spec).unwrap().at(&[0.4, 0.7]);
    let b = mm(&pi, &phi, &psi).unwrap().at(0.4, 0.7);
    assert!((a - b).abs() <= 1e-12);
}

#[test]
fn trivariate_zero_set() {
    let g = Generator::scaled_complement(0.5).unwrap();
    let c = rmm_3(&NCopula::product(3).unwrap(), &g, &g, &g).unwrap();
    let boundary = |u1: f64| (1.0 - u1) / (1.0 + 3.0 * u1);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let (mut inside, mut outside) = (0, 0);
    while inside < 200 || outside < 200 {
        let u = random_point(&mut rng, 3);
        let b = boundary(u[0]);
        if u[1] <= b || u[2] <= b {
            if inside < 200 {
                assert_eq!(c.at(&u), 0.0, "{u:?}");
                inside += 1;
            }
        } else if outside < 200 {
            assert!(c.at(&u) > 0.0, "{u:?}");
            outside += 1;
        }
    }
}

#[test]
fn constructed_ncopulas_satisfy_the_axioms() {
    let mut copulas = vec![NCopula::product(3).unwrap(), NCopula::min(3).unwrap()];
    for gens in [
        vec![Generator::scaled_complement(0.5).unwrap(); 3],
        mixed_generators(3),
    ] {
        for p in [1, 2] {
            let mins: Vec<usize> = (p..3).collect();
            for base in [NCopula::product(3).unwrap(), NCopula::min(3).unwrap()] {
                let c_dot = base.flip_vars(&mins).unwrap();
                copulas.push(rmm_n(&MMNSpec::new(c_dot, gens.clone(), p).unwrap()));
                copulas
                    .push(mm_n(&MMNSpec::new(base, mm_generators(&gens, p), p).unwrap()).unwrap());
            }
        }
        copulas.push(rmm_3(&NCopula::product(3).unwrap(), &gens[0], &gens[1], &gens[2]).unwrap());
    }
    for c in &copulas {
        let report = validate_ncopula(c, 10, 1e-8);
        assert!(report.passed(), "{}: {report:?}", c.label());
        let fine = validate_ncopula(c, 21, 1e-9);
        assert!(
            fine.groundedness <= 1e-9 && fine.margins <= 1e-9,
            "{}: {fine:?}",
            c.label()
        );
    }
}

struct LowerBound3;

impl CopulaN for LowerBound3 {
    fn dim(&self) -> usize {
        3
    }
    fn cdf(&self, u: &[f64]) -> f64 {
        (u.iter().sum::<f64>() - 2.0).max(0.0)
    }
    fn label(&self) -> String {
        "W3".into()
    }
}

#[test]
fn three_dimensional_lower_bound_fails_box_check() {
    let report = validate_ncopula(&NCopula::new(LowerBound3), 10, 1e-8);
    assert!(report.groundedness <= 1e-12 && report.margins <= 1e-12);
    assert!(report.min_volume < -1e-3, "{report:?}");
    assert!(!report.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn simplification_rule(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let lhs = a.max(0.0) - a.min(b).max(0.0);
        prop_assert!((lhs - clipped_difference(a, b)).abs() <= 1e-15);
    }
}
