//! Main-path values against the independent grid and enumeration oracles.

use qrt_games_core::free_sets::{FreeMeasurementSet, FreeStateSet};
use qrt_games_core::linalg::{DensityMatrix, HermitianOperator, Povm};
use qrt_games_core::oracles::{
    grid_free_pair_value, grid_robustness_povm_qubit_trivial, grid_robustness_state_incoherent,
    grid_weight_povm_qubit_trivial, grid_weight_state_incoherent, GridSpec,
};
use qrt_games_core::{
    build_discrimination_game, build_exclusion_game, free_pair_optimum, random, robustness_measurement,
    robustness_state, weight_measurement, weight_state, GameKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRID_TOL: f64 = 2e-4;
// bisection tolerance of the oracles
const BISECTION: f64 = 1e-6;

#[test]
fn qubit_state_quantifiers_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let fs = FreeStateSet::incoherent(2).unwrap();
    let grid = GridSpec::new(1e-4).unwrap();
    for _ in 0..10 {
        let rho = random::state(2, &mut rng);
        let r = robustness_state(&rho, &fs).unwrap().value;
        let rg = grid_robustness_state_incoherent(&rho, &grid).unwrap();
        assert!((r - rg).abs() <= GRID_TOL, "robustness {r} vs grid {rg}");
        // grid points are feasible, so the grid can only overshoot a minimum
        assert!(r <= rg + BISECTION);
        let w = weight_state(&rho, &fs).unwrap().value;
        let wg = grid_weight_state_incoherent(&rho, &grid).unwrap();
        assert!((w - wg).abs() <= GRID_TOL, "weight {w} vs grid {wg}");
        assert!(w <= wg + BISECTION);
    }
}

#[test]
fn qutrit_state_quantifiers_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let fs = FreeStateSet::incoherent(3).unwrap();
    let grid = GridSpec::new(2e-3).unwrap();
    for _ in 0..3 {
        let rho = random::state(3, &mut rng);
        let r = robustness_state(&rho, &fs).unwrap().value;
        let rg = grid_robustness_state_incoherent(&rho, &grid).unwrap();
        assert!(r <= rg + BISECTION && rg - r <= 1e-2, "robustness {r} vs grid {rg}");
        let w = weight_state(&rho, &fs).unwrap().value;
        let wg = grid_weight_state_incoherent(&rho, &grid).unwrap();
        assert!(w <= wg + BISECTION && wg - w <= 1e-2, "weight {w} vs grid {wg}");
    }
}

#[test]
fn qubit_measurement_quantifiers_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for (k, res, tol) in [(2, 1e-5, GRID_TOL), (3, 1e-3, 5e-3)] {
        let grid = GridSpec::new(res).unwrap();
        let fm = FreeMeasurementSet::trivial(2, k).unwrap();
        for _ in 0..5 {
            let m = random::povm(2, k, &mut rng);
            let r = robustness_measurement(&m, &fm).unwrap().value;
            let rg = grid_robustness_povm_qubit_trivial(&m, &grid).unwrap();
            assert!(rg - r <= tol && r <= rg + 1e-7, "robustness {r} vs grid {rg}");
            let w = weight_measurement(&m, &fm).unwrap().value;
            let wg = grid_weight_povm_qubit_trivial(&m, &grid).unwrap();
            assert!(wg - w <= tol && w <= wg + 1e-7, "weight {w} vs grid {wg}");
        }
    }
}

#[test]
fn free_pair_values_of_small_blueprints_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let fs = FreeStateSet::incoherent(2).unwrap();
    let fm2 = FreeMeasurementSet::trivial(2, 2).unwrap();
    // vertices of the product of simplices lie on the grid, so the grid value is exact
    let grid = GridSpec::new(0.25).unwrap();
    let rho = DensityMatrix::new(HermitianOperator::from_real_rows(&[&[0.7, 0.3], &[0.3, 0.3]]).unwrap()).unwrap();
    let m = Povm::new(vec![
        HermitianOperator::from_real_rows(&[&[0.8, 0.25], &[0.25, 0.3]]).unwrap(),
        HermitianOperator::from_real_rows(&[&[0.2, -0.25], &[-0.25, 0.7]]).unwrap(),
    ])
    .unwrap();
    let zr = robustness_state(&rho, &fs).unwrap().witness;
    let zm = robustness_measurement(&m, &fm2).unwrap().witness;
    let n = 2;
    let disc = build_discrimination_game(&zr[0], &zm, n, None).unwrap();
    let game = disc.instrument().unwrap();
    assert_eq!(game.len(), 4);
    let fm = fm2.with_outcomes(4).unwrap();
    let g = grid_free_pair_value(game.subchannels(), GameKind::Discrimination, &grid).unwrap();
    let s = free_pair_optimum(game.subchannels(), GameKind::Discrimination, &fs, &fm, &[], 5, &mut rng).unwrap();
    assert!(g <= disc.free_bound() + 1e-9, "grid {g} above bound {}", disc.free_bound());
    assert!((s.value - g).abs() <= 1e-9, "see-saw {} vs grid {g}", s.value);

    let yr = weight_state(&rho, &fs).unwrap().witness;
    let ym = weight_measurement(&m, &fm2).unwrap().witness;
    let excl = build_exclusion_game(&yr[0], &ym, None).unwrap();
    let game = excl.instrument().unwrap();
    let fm = fm2.with_outcomes(game.len()).unwrap();
    let g = grid_free_pair_value(game.subchannels(), GameKind::Exclusion, &grid).unwrap();
    let s = free_pair_optimum(game.subchannels(), GameKind::Exclusion, &fs, &fm, &[], 5, &mut rng).unwrap();
    assert!(g >= excl.free_bound() - 1e-9, "grid {g} below bound {}", excl.free_bound());
    assert!((s.value - g).abs() <= 1e-9, "see-saw {} vs grid {g}", s.value);
}
