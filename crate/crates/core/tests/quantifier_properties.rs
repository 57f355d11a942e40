use proptest::prelude::*;
use qrt_games_core::free_sets::{FreeMeasurementSet, FreeStateSet};
use qrt_games_core::linalg::{DensityMatrix, Povm};
use qrt_games_core::quantifiers::{
    robustness_measurement_dual, robustness_state_dual, weight_measurement_dual, weight_state_dual,
};
use qrt_games_core::{random, robustness_measurement, robustness_state, weight_measurement, weight_state};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];

fn measurement_set(kind: u8, d: usize, k: usize) -> FreeMeasurementSet {
    if kind == 0 {
        FreeMeasurementSet::trivial(d, k).unwrap()
    } else {
        FreeMeasurementSet::incoherent(d, k).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn state_quantifiers_are_convex(seed: u64, d in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs = FreeStateSet::incoherent(d).unwrap();
        let a = random::state(d, &mut rng);
        let b = random::state(d, &mut rng);
        for q in [robustness_state, weight_state] {
            let (qa, qb) = (q(&a, &fs).unwrap().value, q(&b, &fs).unwrap().value);
            for l in LAMBDAS {
                let mix = q(&a.mix(&b, l).unwrap(), &fs).unwrap().value;
                prop_assert!(mix <= l * qa + (1.0 - l) * qb + 1e-7);
            }
        }
    }

    #[test]
    fn measurement_quantifiers_are_convex(seed: u64, k in 2usize..=3, kind in 0u8..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fm = measurement_set(kind, 2, k);
        let a = random::povm(2, k, &mut rng);
        let b = random::povm(2, k, &mut rng);
        for q in [robustness_measurement, weight_measurement] {
            let (qa, qb) = (q(&a, &fm).unwrap().value, q(&b, &fm).unwrap().value);
            for l in LAMBDAS {
                let mix = q(&a.mix(&b, l).unwrap(), &fm).unwrap().value;
                prop_assert!(mix <= l * qa + (1.0 - l) * qb + 1e-7);
            }
        }
    }

    #[test]
    fn measurement_quantifiers_do_not_increase_under_post_processing(seed: u64, k in 2usize..=3, out in 2usize..=3, kind in 0u8..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random::povm(2, k, &mut rng);
        let p = random::stochastic_matrix(k, out, &mut rng);
        let processed = m.post_process(&p).unwrap();
        let fm = measurement_set(kind, 2, k);
        let fp = fm.with_outcomes(out).unwrap();
        prop_assert!(robustness_measurement(&processed, &fp).unwrap().value <= robustness_measurement(&m, &fm).unwrap().value + 1e-7);
        prop_assert!(weight_measurement(&processed, &fp).unwrap().value <= weight_measurement(&m, &fm).unwrap().value + 1e-7);
    }

    #[test]
    fn state_witnesses_are_strict(seed: u64, d in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs = FreeStateSet::incoherent(d).unwrap();
        let rho = random::state(d, &mut rng);
        let r = robustness_state(&rho, &fs).unwrap();
        prop_assume!(r.value > 1e-6);
        prop_assert!(r.witness[0].pair(rho.op()) > 1.0);
        prop_assert!(r.witness[0].min_eigenvalue() >= -1e-8);
        prop_assert!(r.witness_violation_state(&fs).unwrap() <= 1e-7);
        let w = weight_state(&rho, &fs).unwrap();
        prop_assume!(w.value > 1e-6);
        prop_assert!(w.witness[0].pair(rho.op()) < 1.0);
        for _ in 0..100 {
            let sigma = random::free_state(&fs, &mut rng).unwrap();
            prop_assert!(w.witness[0].pair(sigma.op()) >= 1.0 - 1e-7);
        }
    }

    #[test]
    fn measurement_witnesses_are_strict(seed: u64, k in 2usize..=3, kind in 0u8..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fm = measurement_set(kind, 2, k);
        let m = random::povm(2, k, &mut rng);
        let pairing = |ws: &[qrt_games_core::linalg::HermitianOperator], n: &Povm| -> f64 {
            (0..k).map(|x| ws[x].pair(n.element(x))).sum()
        };
        let r = robustness_measurement(&m, &fm).unwrap();
        prop_assume!(r.value > 1e-6);
        prop_assert!(pairing(&r.witness, &m) > 1.0);
        prop_assert!(r.witness_violation_measurement(&fm).unwrap() <= 1e-7);
        let w = weight_measurement(&m, &fm).unwrap();
        prop_assume!(w.value > 1e-6);
        prop_assert!(pairing(&w.witness, &m) < 1.0);
        for _ in 0..100 {
            let n = random::free_povm(&fm, &mut rng).unwrap();
            prop_assert!(pairing(&w.witness, &n) >= 1.0 - 1e-7);
        }
    }

    #[test]
    fn primal_and_dual_agree(seed: u64, d in 2usize..=3, kind in 0u8..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs = FreeStateSet::incoherent(d).unwrap();
        let rho = random::state(d, &mut rng);
        prop_assert!((robustness_state(&rho, &fs).unwrap().value - robustness_state_dual(&rho, &fs).unwrap().value).abs() <= 1e-6);
        prop_assert!((weight_state(&rho, &fs).unwrap().value - weight_state_dual(&rho, &fs).unwrap().value).abs() <= 1e-6);
        let fm = measurement_set(kind, d, 2);
        let m = random::povm(d, 2, &mut rng);
        prop_assert!((robustness_measurement(&m, &fm).unwrap().value - robustness_measurement_dual(&m, &fm).unwrap().value).abs() <= 1e-6);
        prop_assert!((weight_measurement(&m, &fm).unwrap().value - weight_measurement_dual(&m, &fm).unwrap().value).abs() <= 1e-6);
    }

    #[test]
    fn quantifiers_vanish_exactly_on_free_objects(seed: u64, d in 2usize..=3, kind in 0u8..2, free in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs = FreeStateSet::incoherent(d).unwrap();
        let rho: DensityMatrix = if free { random::free_state(&fs, &mut rng).unwrap() } else { random::state(d, &mut rng) };
        let member = fs.membership(&rho, 1e-8).unwrap().is_member;
        prop_assert_eq!(robustness_state(&rho, &fs).unwrap().value == 0.0, member);
        prop_assert_eq!(weight_state(&rho, &fs).unwrap().value == 0.0, member);
        let fm = measurement_set(kind, 2, 2);
        let m = if free { random::free_povm(&fm, &mut rng).unwrap() } else { random::povm(2, 2, &mut rng) };
        let member = fm.membership(&m, 1e-8).unwrap().is_member;
        prop_assert_eq!(robustness_measurement(&m, &fm).unwrap().value == 0.0, member);
        prop_assert_eq!(weight_measurement(&m, &fm).unwrap().value == 0.0, member);
    }
}
