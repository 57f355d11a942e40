//! Acceptance gate: one PASS/FAIL line per criterion, written straight to
//! stdout so it shows even under output capture.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use qrt_games_core::free_sets::{FreeMeasurementSet, FreeStateSet, MEMBERSHIP_TOL};
use qrt_games_core::games::{build_discrimination_game, build_exclusion_game, default_n, evaluate, GameKind};
use qrt_games_core::infotheory::certify_result3;
use qrt_games_core::oracles::{
    enumerate_post_processings, grid_robustness_povm_qubit_trivial, grid_robustness_state_incoherent,
    grid_robustness_state_qubit_incoherent, grid_weight_povm_qubit_trivial, grid_weight_state_incoherent,
    GridSpec,
};
use qrt_games_core::quantifiers::{
    robustness_measurement_dual, robustness_state_dual, weight_measurement_dual, weight_state_dual,
};
use qrt_games_core::{
    certify_result1, certify_result2, random, robustness_measurement, robustness_state, weight_measurement,
    weight_state, DensityMatrix, HermitianOperator, Povm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let line = format!("[{}] {id} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn incoherent(d: usize) -> FreeStateSet {
    FreeStateSet::incoherent(d).unwrap()
}

fn trivial(d: usize, k: usize) -> FreeMeasurementSet {
    FreeMeasurementSet::trivial(d, k).unwrap()
}

/// Fully resourceful qubit pairs with both robustnesses at least 0.05.
fn resourceful_pairs() -> &'static Vec<(DensityMatrix, Povm)> {
    static PAIRS: OnceLock<Vec<(DensityMatrix, Povm)>> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let mut r = rng(4);
        let (fs, fm) = (incoherent(2), trivial(2, 2));
        let mut out = Vec::new();
        while out.len() < 50 {
            let rho = random::state(2, &mut r);
            let m = random::povm(2, 2, &mut r);
            let rs = robustness_state(&rho, &fs).unwrap().value;
            let rm = robustness_measurement(&m, &fm).unwrap().value;
            if rs >= 0.05 && rm >= 0.05 {
                out.push((rho, m));
            }
        }
        out
    })
}

#[test]
fn criterion_1_strong_duality() {
    let t = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..100 {
        let d = 2 + i % 2;
        let rho = random::state(d, &mut r);
        let fs = incoherent(d);
        worst = worst.max((robustness_state(&rho, &fs).unwrap().value - robustness_state_dual(&rho, &fs).unwrap().value).abs());
        worst = worst.max((weight_state(&rho, &fs).unwrap().value - weight_state_dual(&rho, &fs).unwrap().value).abs());
        count += 2;
    }
    for i in 0..100 {
        let k = 2 + i % 2;
        let m = random::povm(2, k, &mut r);
        let fm = if i % 4 < 2 { trivial(2, k) } else { FreeMeasurementSet::incoherent(2, k).unwrap() };
        worst = worst
            .max((robustness_measurement(&m, &fm).unwrap().value - robustness_measurement_dual(&m, &fm).unwrap().value).abs());
        worst =
            worst.max((weight_measurement(&m, &fm).unwrap().value - weight_measurement_dual(&m, &fm).unwrap().value).abs());
        count += 2;
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst <= 1e-6;
    report(
        1,
        "strong duality",
        pass,
        format!("{count} primal/dual pairs, max |primal - dual| = {worst:.2e} (tol 1e-6), {secs:.1} s (target < 60 s)"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_oracle_equivalence() {
    let t = Instant::now();
    let mut r = rng(2);
    let state_grid = GridSpec::new(1e-4).unwrap();
    let povm_grid = GridSpec::new(1e-5).unwrap();
    let (fs, fm) = (incoherent(2), trivial(2, 2));
    let mut worst_q: f64 = 0.0;
    for _ in 0..20 {
        let rho = random::state(2, &mut r);
        worst_q = worst_q.max(
            (robustness_state(&rho, &fs).unwrap().value - grid_robustness_state_qubit_incoherent(&rho, &state_grid).unwrap())
                .abs(),
        );
        worst_q = worst_q
            .max((weight_state(&rho, &fs).unwrap().value - grid_weight_state_incoherent(&rho, &state_grid).unwrap()).abs());
        let m = random::povm(2, 2, &mut r);
        worst_q = worst_q.max(
            (robustness_measurement(&m, &fm).unwrap().value - grid_robustness_povm_qubit_trivial(&m, &povm_grid).unwrap())
                .abs(),
        );
        worst_q = worst_q
            .max((weight_measurement(&m, &fm).unwrap().value - grid_weight_povm_qubit_trivial(&m, &povm_grid).unwrap()).abs());
    }
    let mut worst_e: f64 = 0.0;
    for _ in 0..100 {
        let (k, o) = loop {
            let k = r.random_range(2..=4);
            let o = r.random_range(2..=4);
            if k * o <= 12 {
                break (k, o);
            }
        };
        let d_in = r.random_range(2..=3);
        let d_out = r.random_range(2..=3);
        let game = random::instrument(d_in, d_out, k, &mut r);
        let rho = random::state(d_in, &mut r);
        let m = random::povm(d_out, o, &mut r);
        for kind in [GameKind::Discrimination, GameKind::Exclusion] {
            let fast = evaluate(&game, &rho, &m, kind).unwrap().value;
            let (slow, _) = enumerate_post_processings(game.subchannels(), &rho, &m, kind).unwrap();
            worst_e = worst_e.max((fast - slow).abs());
        }
    }
    let pass = worst_q <= 2e-4 && worst_e <= 1e-12;
    report(
        2,
        "oracle equivalence",
        pass,
        format!(
            "80 quantifier checks max |SDP - grid| = {worst_q:.2e} (tol 2e-4); 200 game evaluations max |eval - enumeration| = {worst_e:.2e} (tol 1e-12), {:.1} s",
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_known_values() {
    let g = GridSpec::new(1e-4).unwrap();
    let g3 = GridSpec::new(1e-3).unwrap();
    let proj = Povm::computational(2);
    let half = DensityMatrix::new(HermitianOperator::from_real_rows(&[&[0.5, 0.25], &[0.25, 0.5]]).unwrap()).unwrap();
    let noisy = Povm::new(vec![HermitianOperator::diag(&[0.75, 0.25]), HermitianOperator::diag(&[0.25, 0.75])]).unwrap();
    let coherent = DensityMatrix::maximally_coherent(3);
    let cases: Vec<(&str, f64, f64, f64)> = vec![
        (
            "R(|+><+|)",
            1.0,
            robustness_state(&DensityMatrix::plus(), &incoherent(2)).unwrap().value,
            grid_robustness_state_qubit_incoherent(&DensityMatrix::plus(), &g).unwrap(),
        ),
        (
            "R(qutrit maximally coherent)",
            2.0,
            robustness_state(&coherent, &incoherent(3)).unwrap().value,
            grid_robustness_state_incoherent(&coherent, &g3).unwrap(),
        ),
        (
            "R(projective qubit POVM)",
            1.0,
            robustness_measurement(&proj, &trivial(2, 2)).unwrap().value,
            grid_robustness_povm_qubit_trivial(&proj, &g).unwrap(),
        ),
        (
            "W(projective qubit POVM)",
            1.0,
            weight_measurement(&proj, &trivial(2, 2)).unwrap().value,
            grid_weight_povm_qubit_trivial(&proj, &g).unwrap(),
        ),
        (
            "W([[.5,.25],[.25,.5]])",
            0.5,
            weight_state(&half, &incoherent(2)).unwrap().value,
            grid_weight_state_incoherent(&half, &g).unwrap(),
        ),
        (
            "W(noisy POVM)",
            0.5,
            weight_measurement(&noisy, &trivial(2, 2)).unwrap().value,
            grid_weight_povm_qubit_trivial(&noisy, &g).unwrap(),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, expect, sdp, oracle) in cases {
        let ok = (sdp - expect).abs() <= 1e-6 && (oracle - expect).abs() <= 2e-4;
        pass &= ok;
        parts.push(format!("{name} = {sdp:.9} (oracle {oracle:.6}){}", if ok { "" } else { " MISMATCH" }));
    }
    report(3, "known values", pass, format!("{} (tol 1e-6, oracle 2e-4)", parts.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_4_result1() {
    let t = Instant::now();
    let (fs, fm) = (incoherent(2), trivial(2, 2));
    let mut min_d = f64::INFINITY;
    let mut min_e = f64::INFINITY;
    for (rho, m) in resourceful_pairs() {
        let rep = certify_result1(rho, m, &fs, &fm).unwrap();
        min_d = min_d.min(rep.discrimination_gap);
        min_e = min_e.min(rep.exclusion_gap);
    }
    let pass = min_d >= 1e-4 && min_e >= 1e-4;
    report(
        4,
        "result 1 strict advantage",
        pass,
        format!(
            "50 pairs, min discrimination gap {min_d:.4e}, min exclusion gap {min_e:.4e} (need >= 1e-4), {:.1} s (target < 300 s)",
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_result2() {
    let t = Instant::now();
    let (fs, fm) = (incoherent(2), trivial(2, 2));
    let mut r = rng(5);
    let (mut contains, mut width, mut excl, mut chains, mut games) = (true, 0.0_f64, 0.0_f64, true, 0);
    for (rho, m) in resourceful_pairs() {
        let rep = certify_result2(rho, m, &fs, &fm, None, 20, &mut r).unwrap();
        contains &= rep.discrimination_contains;
        width = width.max(rep.relative_width);
        excl = excl.max((rep.exclusion_ratio - rep.weight_product).abs());
        chains &= rep.chains_hold;
        games += rep.random_games.len();
    }
    let pass = contains && width <= 2e-3 && excl <= 1e-5 && chains;
    report(
        5,
        "result 2 exact quantification",
        pass,
        format!(
            "50 pairs: interval contains product = {contains}, max relative width {width:.3e} (<= 2e-3), max |exclusion ratio - (1-W)(1-W)| = {excl:.2e} (<= 1e-5), {games} random-game chains hold = {chains} (tol 1e-7), {:.1} s",
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_result3() {
    let t = Instant::now();
    let mut r = rng(6);
    let ensembles: Vec<_> = (0..20)
        .map(|i| random::ensemble(2, 2, 2 + i % 3, &mut r))
        .collect();
    let (fs, fm) = (incoherent(2), trivial(2, 2));
    let (mut holds, mut id_err, mut worst_plus) = (true, 0.0_f64, f64::NEG_INFINITY);
    for _ in 0..10 {
        let rho = random::state(2, &mut r);
        let m = random::povm(2, 2, &mut r);
        let rep = certify_result3(&rho, &m, &fs, &fm, &ensembles, &mut r).unwrap();
        holds &= rep.holds;
        for c in &rep.ensembles {
            id_err = id_err.max(c.identity_plus_error).max(c.identity_minus_error);
            worst_plus = worst_plus.max(c.info_plus_gap - rep.bound_plus);
        }
    }
    let pass = holds && id_err <= 1e-10;
    report(
        6,
        "result 3 information bounds",
        pass,
        format!(
            "20 ensembles x 10 pairs: bounds hold = {holds} (tol 1e-6), max (I+ gap - bound) = {worst_plus:.3e}, max entropy identity error {id_err:.2e} (tol 1e-10), {:.1} s",
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_structural_invariants() {
    let t = Instant::now();
    let mut r = rng(7);

    // CPTP normalisation of constructed blueprints
    let (fs, fm) = (incoherent(2), trivial(2, 2));
    let mut cptp: f64 = 0.0;
    for (rho, m) in resourceful_pairs().iter().take(20) {
        let rs = robustness_state(rho, &fs).unwrap();
        let rm = robustness_measurement(m, &fm).unwrap();
        let ws = weight_state(rho, &fs).unwrap();
        let wm = weight_measurement(m, &fm).unwrap();
        let n = default_n(build_discrimination_game(&rs.witness[0], &rm.witness, 1, None).unwrap().parameter());
        cptp = cptp.max(build_discrimination_game(&rs.witness[0], &rm.witness, n, None).unwrap().cptp_deviation());
        cptp = cptp.max(build_exclusion_game(&ws.witness[0], &wm.witness, None).unwrap().cptp_deviation());
    }

    // k = 2 complementarity
    let mut comp: f64 = 0.0;
    for _ in 0..100 {
        let game = random::instrument(2, 2, 2, &mut r);
        let rho = random::state(2, &mut r);
        let m = random::povm(2, r.random_range(2..=4), &mut r);
        let s = evaluate(&game, &rho, &m, GameKind::Discrimination).unwrap().value;
        let e = evaluate(&game, &rho, &m, GameKind::Exclusion).unwrap().value;
        comp = comp.max((s + e - 1.0).abs());
    }

    // CPP monotonicity of measurement quantifiers
    let mut mono: f64 = f64::NEG_INFINITY;
    for i in 0..50 {
        let k = 2 + i % 2;
        let k2 = 2 + (i / 2) % 2;
        let m = random::povm(2, k, &mut r);
        let stoch = random::stochastic_matrix(k, k2, &mut r);
        let n = m.post_process(&stoch).unwrap();
        let (f1, f2) = if i % 3 == 0 {
            (FreeMeasurementSet::incoherent(2, k).unwrap(), FreeMeasurementSet::incoherent(2, k2).unwrap())
        } else {
            (trivial(2, k), trivial(2, k2))
        };
        mono = mono.max(robustness_measurement(&n, &f2).unwrap().value - robustness_measurement(&m, &f1).unwrap().value);
        mono = mono.max(weight_measurement(&n, &f2).unwrap().value - weight_measurement(&m, &f1).unwrap().value);
    }

    // faithfulness
    let mut faithful = 0;
    let mut unfaithful = Vec::new();
    for i in 0..200 {
        let sample_free = i % 2 == 0;
        let (zero_r, zero_w, member) = if i < 100 {
            let d = 2 + (i / 2) % 2;
            let f = incoherent(d);
            let rho = if sample_free { random::free_state(&f, &mut r).unwrap() } else { random::state(d, &mut r) };
            (
                robustness_state(&rho, &f).unwrap().value == 0.0,
                weight_state(&rho, &f).unwrap().value == 0.0,
                f.membership(&rho, MEMBERSHIP_TOL).unwrap().is_member,
            )
        } else {
            let k = 2 + (i / 2) % 2;
            let f = if i % 4 < 2 { trivial(2, k) } else { FreeMeasurementSet::incoherent(2, k).unwrap() };
            let m = if sample_free { random::free_povm(&f, &mut r).unwrap() } else { random::povm(2, k, &mut r) };
            (
                robustness_measurement(&m, &f).unwrap().value == 0.0,
                weight_measurement(&m, &f).unwrap().value == 0.0,
                f.membership(&m, MEMBERSHIP_TOL).unwrap().is_member,
            )
        };
        if zero_r == member && zero_w == member {
            faithful += 1;
        } else {
            unfaithful.push(i);
        }
    }

    let pass = cptp <= 1e-8 && comp <= 1e-10 && mono <= 1e-7 && faithful == 200;
    report(
        7,
        "structural invariants",
        pass,
        format!(
            "blueprint CPTP deviation {cptp:.2e} (<= 1e-8); k=2 complementarity {comp:.2e} (<= 1e-10); CPP monotonicity max increase {mono:.2e} (<= 1e-7); faithfulness {faithful}/200{}, {:.1} s",
            if unfaithful.is_empty() { String::new() } else { format!(" (failed {unfaithful:?})") },
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}
