use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qrt_games_core::free_sets::{FreeMeasurementSet, FreeStateSet};
use qrt_games_core::{
    build_discrimination_game, certify_result1, eval_discrimination, eval_exclusion, free_pair_optimum, random,
    robustness_measurement, robustness_state, GameKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for (d, k, o) in [(2, 2, 2), (2, 4, 4), (3, 3, 3), (4, 4, 4)] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let game = random::instrument(d, d, k, &mut rng);
        let rho = random::state(d, &mut rng);
        let m = random::povm(d, o, &mut rng);
        let id = format!("d{d}k{k}o{o}");
        group.bench_function(BenchmarkId::new("discrimination", &id), |b| {
            b.iter(|| eval_discrimination(&game, &rho, &m).unwrap().value)
        });
        group.bench_function(BenchmarkId::new("exclusion", &id), |b| {
            b.iter(|| eval_exclusion(&game, &rho, &m).unwrap().value)
        });
    }
    group.finish();
}

fn blueprints(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fs = FreeStateSet::incoherent(2).unwrap();
    let fm = FreeMeasurementSet::trivial(2, 2).unwrap();
    let rho = random::state(2, &mut rng);
    let m = random::povm(2, 2, &mut rng);
    let zr = robustness_state(&rho, &fs).unwrap().witness;
    let zm = robustness_measurement(&m, &fm).unwrap().witness;

    let mut group = c.benchmark_group("blueprint");
    for n in [10, 1000, 100_000] {
        let bp = build_discrimination_game(&zr[0], &zm, n, None).unwrap();
        group.bench_with_input(BenchmarkId::new("build", n), &n, |b, &n| {
            b.iter(|| build_discrimination_game(&zr[0], &zm, n, None).unwrap().parameter())
        });
        group.bench_with_input(BenchmarkId::new("evaluate", n), &bp, |b, bp| {
            b.iter(|| bp.evaluate(&rho, &m).unwrap().value)
        });
    }
    group.finish();

    c.bench_function("certify_result1_qubit", |b| {
        b.iter(|| certify_result1(&rho, &m, &fs, &fm).unwrap().holds)
    });
}

fn seesaw(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let game = random::instrument(2, 2, 3, &mut rng);
    let fs = FreeStateSet::incoherent(2).unwrap();
    let fm = FreeMeasurementSet::incoherent(2, 3).unwrap();
    c.bench_function("free_pair_optimum_k3", |b| {
        b.iter(|| {
            let mut r = ChaCha8Rng::seed_from_u64(1);
            free_pair_optimum(game.subchannels(), GameKind::Discrimination, &fs, &fm, &[], 3, &mut r)
                .unwrap()
                .value
        })
    });
}

criterion_group!(benches, evaluation, blueprints, seesaw);
criterion_main!(benches);
