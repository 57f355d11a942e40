use proptest::prelude::*;
use qrt_games_core::infotheory::{conditional_entropy_minus, conditional_entropy_plus};
use qrt_games_core::{
    eval_discrimination, eval_exclusion, joint_from_task, mutual_info_minus, mutual_info_plus, random,
    JointDistribution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_joint(k: usize, o: usize, rng: &mut ChaCha8Rng) -> JointDistribution {
    let prior = random::probability_vector(k, rng);
    let probs: Vec<Vec<f64>> = prior
        .iter()
        .map(|&p| random::probability_vector(o, rng).into_iter().map(|q| p * q).collect())
        .collect();
    JointDistribution::new(probs, prior).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn merging_guesses_never_increases_information(seed: u64, k in 2usize..=4, o in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = random_joint(k, o, &mut rng);
        let a = rng.random_range(0..o);
        let b = (a + rng.random_range(1..o)) % o;
        let merged = j.merge_guesses(a, b).unwrap();
        prop_assert_eq!(merged.guesses(), o - 1);
        prop_assert!(mutual_info_plus(&merged) <= mutual_info_plus(&j) + 1e-12);
    }

    #[test]
    fn information_ranges(seed: u64, k in 2usize..=4, o in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = random_joint(k, o, &mut rng);
        let ip = mutual_info_plus(&j);
        prop_assert!(ip >= -1e-12 && ip <= (k as f64).log2() + 1e-12);
        let im = mutual_info_minus(&j);
        prop_assert!(im >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn conditional_entropies_are_game_values(seed: u64, d in 2usize..=3, k in 2usize..=3, o in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ensemble = random::ensemble(d, d, k, &mut rng);
        let rho = random::state(d, &mut rng);
        let m = random::povm(d, o, &mut rng);
        let joint = joint_from_task(&ensemble, &rho, &m).unwrap();
        let game = ensemble.as_game().unwrap();
        let succ = eval_discrimination(&game, &rho, &m).unwrap().value;
        let err = eval_exclusion(&game, &rho, &m).unwrap().value;
        prop_assert!((conditional_entropy_plus(&joint) + succ.log2()).abs() <= 1e-10);
        if err > 0.0 {
            prop_assert!((conditional_entropy_minus(&joint) + err.log2()).abs() <= 1e-10);
        }
    }
}

#[test]
fn zero_error_gives_infinite_minus_information() {
    // every guess rules out some message, so the exclusion error is zero
    let j = JointDistribution::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]], vec![0.5, 0.5]).unwrap();
    assert_eq!(mutual_info_minus(&j), f64::INFINITY);
    assert!((mutual_info_plus(&j) - 1.0).abs() < 1e-12);
}
