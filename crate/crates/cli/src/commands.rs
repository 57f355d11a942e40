use anyhow::{bail, Context, Result};
use qrt_games_core::games::{default_n, GameKind};
use qrt_games_core::oracles::{
    enumerate_post_processings, grid_robustness_povm_qubit_trivial, grid_robustness_state_incoherent,
    grid_weight_povm_qubit_trivial, grid_weight_state_incoherent, GridSpec,
};
use qrt_games_core::quantifiers::{
    robustness_measurement_dual, robustness_measurement_with, robustness_state_dual, robustness_state_with,
    weight_measurement_dual, weight_measurement_with, weight_state_dual, weight_state_with,
};
use qrt_games_core::{
    build_discrimination_game, build_exclusion_game, certify_result1, certify_result2, certify_result3, random,
    robustness_measurement, robustness_state, weight_measurement, weight_state, DensityMatrix, FreeSetDescriptor,
    Povm, QuantifierResult, SolverOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::inputs::{self, Game};
use crate::report::{emit, emit_raw, write_solver_log, Envelope, Inputs};
use crate::{
    BuildGameArgs, CertifyArgs, Command, Common, EvaluateArgs, Format, Objects, Outcome, QuantifyArgs, QuantityArg,
    Tolerances, VerifyArgs,
};

pub fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Quantify(a) => quantify(a),
        Command::BuildGame(a) => build_game(a),
        Command::Evaluate(a) => evaluate(a),
        Command::CertifyResult1(a) => certify1(a),
        Command::CertifyResult2(a) => certify2(a),
        Command::CertifyResult3(a) => certify3(a),
        Command::Verify(a) => verify(a),
    }
}

fn solver_options(t: &Tolerances) -> Result<SolverOptions> {
    if !(t.tol_gap > 0.0 && t.tol_feas > 0.0) {
        bail!("solver tolerances must be positive (got gap {}, feas {})", t.tol_gap, t.tol_feas);
    }
    Ok(SolverOptions {
        gap_tol: t.tol_gap,
        feas_tol: t.tol_feas,
        ..SolverOptions::default()
    })
}

fn finish<R: Serialize>(
    common: &Common,
    command: &str,
    inputs: &Inputs,
    holds: Option<bool>,
    report: R,
) -> Result<Outcome> {
    emit(
        common,
        &Envelope {
            command,
            seed: common.seed,
            inputs,
            holds,
            report,
        },
    )?;
    Ok(if holds == Some(false) { Outcome::Violation } else { Outcome::Ok })
}

/// State and measurement together with their free-set descriptors.
struct Pair {
    rho: DensityMatrix,
    m: Povm,
    free: FreeSetDescriptor,
    mfree: FreeSetDescriptor,
}

fn load_pair(o: &Objects) -> Result<Pair> {
    let (Some(sp), Some(mp)) = (&o.state, &o.povm) else {
        bail!("--state and --povm are both required");
    };
    let rho = inputs::state(sp)?;
    let m = inputs::povm(mp)?;
    let free = inputs::state_descriptor(&o.free, rho.dim())?;
    let mfree = inputs::measurement_descriptor(&o.mfree, m.dim(), m.outcomes())?;
    Ok(Pair { rho, m, free, mfree })
}

impl Pair {
    fn inputs(&self) -> Inputs {
        Inputs {
            state: Some(self.rho.clone()),
            povm: Some(self.m.clone()),
            free: Some(self.free.clone()),
            mfree: Some(self.mfree.clone()),
            ..Inputs::default()
        }
    }
}

fn quantify(a: QuantifyArgs) -> Result<Outcome> {
    let opts = solver_options(&a.tol)?;
    if a.objects.state.is_none() && a.objects.povm.is_none() {
        bail!("quantify needs --state and/or --povm");
    }
    let robustness = a.quantity != QuantityArg::Weight;
    let weight = a.quantity != QuantityArg::Robustness;
    let mut inp = Inputs {
        tol_gap: Some(a.tol.tol_gap),
        tol_feas: Some(a.tol.tol_feas),
        ..Inputs::default()
    };
    let mut results: Vec<QuantifierResult> = Vec::new();
    if let Some(p) = &a.objects.state {
        let rho = inputs::state(p)?;
        let desc = inputs::state_descriptor(&a.objects.free, rho.dim())?;
        let fs = inputs::free_states(&desc)?;
        if robustness {
            results.push(robustness_state_with(&rho, &fs, &opts)?);
        }
        if weight {
            results.push(weight_state_with(&rho, &fs, &opts)?);
        }
        inp.state = Some(rho);
        inp.free = Some(desc);
    }
    if let Some(p) = &a.objects.povm {
        let m = inputs::povm(p)?;
        let desc = inputs::measurement_descriptor(&a.objects.mfree, m.dim(), m.outcomes())?;
        let fm = inputs::free_measurements(&desc)?;
        if robustness {
            results.push(robustness_measurement_with(&m, &fm, &opts)?);
        }
        if weight {
            results.push(weight_measurement_with(&m, &fm, &opts)?);
        }
        inp.povm = Some(m);
        inp.mfree = Some(desc);
    }
    let names: Vec<String> = results.iter().map(quantity_name).collect();
    let solves: Vec<(&str, &QuantifierResult)> = names.iter().map(String::as_str).zip(&results).collect();
    write_solver_log(&a.tol, &solves)?;
    finish(&a.common, "quantify", &inp, None, results)
}

fn quantity_name(r: &QuantifierResult) -> String {
    serde_json::to_value(r.quantity)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn build_game(a: BuildGameArgs) -> Result<Outcome> {
    let p = load_pair(&a.objects)?;
    let fs = inputs::free_states(&p.free)?;
    let fm = inputs::free_measurements(&p.mfree)?;
    let bp = match GameKind::from(a.kind) {
        GameKind::Discrimination => {
            let rs = robustness_state(&p.rho, &fs)?;
            let rm = robustness_measurement(&p.m, &fm)?;
            let n = match a.n {
                Some(0) => bail!("--n must be at least 1"),
                Some(n) => n,
                None => default_n(build_discrimination_game(&rs.witness[0], &rm.witness, 1, None)?.parameter()),
            };
            build_discrimination_game(&rs.witness[0], &rm.witness, n, None)?
        }
        GameKind::Exclusion => {
            if a.n.is_some() {
                bail!("--n applies to discrimination games only");
            }
            let ws = weight_state(&p.rho, &fs)?;
            let wm = weight_measurement(&p.m, &fm)?;
            build_exclusion_game(&ws.witness[0], &wm.witness, None)?
        }
    };
    match a.common.format {
        Format::Json => emit_raw(&a.common, &bp.to_json()?)?,
        Format::Csv => {
            let inp = p.inputs();
            finish(&a.common, "build-game", &inp, None, &bp)?;
        }
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct EvaluateReport {
    kind: GameKind,
    subchannels: usize,
    value: f64,
    post_processing: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    free_bound: Option<f64>,
}

fn evaluate(a: EvaluateArgs) -> Result<Outcome> {
    let game = Game::load(&a.game)?;
    let kind = game.kind(a.kind)?;
    let rho = inputs::state(&a.state)?;
    let m = inputs::povm(&a.povm)?;
    let e = game.evaluate(&rho, &m, kind)?;
    let (subchannels, free_bound) = match &game {
        Game::Blueprint(b) => (b.num_subchannels(), Some(b.free_bound())),
        other => (other.instrument()?.len(), None),
    };
    let inp = Inputs {
        state: Some(rho),
        povm: Some(m),
        game: Some(game),
        kind: Some(kind_name(kind).into()),
        ..Inputs::default()
    };
    let report = EvaluateReport {
        kind,
        subchannels,
        value: e.value,
        post_processing: e.post_processing,
        free_bound,
    };
    finish(&a.common, "evaluate", &inp, None, report)
}

fn kind_name(k: GameKind) -> &'static str {
    match k {
        GameKind::Discrimination => "discrimination",
        GameKind::Exclusion => "exclusion",
    }
}

fn certify1(a: CertifyArgs) -> Result<Outcome> {
    let p = load_pair(&a.objects)?;
    let fs = inputs::free_states(&p.free)?;
    let fm = inputs::free_measurements(&p.mfree)?;
    let rep = certify_result1(&p.rho, &p.m, &fs, &fm)?;
    finish(&a.common, "certify-result1", &p.inputs(), Some(rep.holds), &rep)
}

fn certify2(a: CertifyArgs) -> Result<Outcome> {
    let p = load_pair(&a.objects)?;
    let fs = inputs::free_states(&p.free)?;
    let fm = inputs::free_measurements(&p.mfree)?;
    if a.n == Some(0) {
        bail!("--n must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let rep = certify_result2(&p.rho, &p.m, &fs, &fm, a.n, a.random_games, &mut rng)?;
    let mut inp = p.inputs();
    inp.n = a.n;
    finish(&a.common, "certify-result2", &inp, Some(rep.holds), &rep)
}

fn certify3(a: CertifyArgs) -> Result<Outcome> {
    let p = load_pair(&a.objects)?;
    let fs = inputs::free_states(&p.free)?;
    let fm = inputs::free_measurements(&p.mfree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let mut ensembles = a.ensemble.iter().map(|e| inputs::ensemble(e)).collect::<Result<Vec<_>>>()?;
    for i in 0..a.random_ensembles {
        ensembles.push(random::ensemble(p.rho.dim(), p.m.dim(), 2 + i % 3, &mut rng));
    }
    if ensembles.is_empty() {
        bail!("certify-result3 needs --ensemble files or --random-ensembles");
    }
    let rep = certify_result3(&p.rho, &p.m, &fs, &fm, &ensembles, &mut rng)?;
    let mut inp = p.inputs();
    inp.ensembles = ensembles;
    finish(&a.common, "certify-result3", &inp, Some(rep.holds), &rep)
}

/// Primal and dual optima agree within this.
const DUALITY_TOL: f64 = 1e-6;
/// Witness constraints hold within this on the free set.
const WITNESS_TOL: f64 = 1e-7;
/// Grid values bracket the SDP value from above within the bisection tolerance.
const BISECTION_TOL: f64 = 1e-6;
/// Game evaluation against exhaustive enumeration.
const ENUMERATION_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct Check {
    name: String,
    main: f64,
    reference: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn close(name: impl Into<String>, main: f64, reference: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            main,
            reference,
            tolerance,
            passed: (main - reference).abs() <= tolerance,
        }
    }

    /// Grid values bracket a minimum from above.
    fn bracket(name: impl Into<String>, main: f64, grid: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            main,
            reference: grid,
            tolerance,
            passed: main <= grid + BISECTION_TOL && grid - main <= tolerance,
        }
    }

    fn at_most(name: impl Into<String>, main: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            main,
            reference: limit,
            tolerance: 0.0,
            passed: main <= limit,
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    checks: Vec<Check>,
    skipped: Vec<String>,
}

/// Grid step and bracket tolerance for the state oracles.
fn state_grid(d: usize) -> Option<(f64, f64)> {
    match d {
        2 => Some((1e-4, 2e-4)),
        3 => Some((2e-3, 1e-2)),
        _ => None,
    }
}

/// Grid step and bracket tolerance for the qubit trivial-measurement oracles.
fn povm_grid(k: usize) -> Option<(f64, f64)> {
    match k {
        2 => Some((1e-5, 2e-4)),
        3 => Some((1e-3, 5e-3)),
        _ => None,
    }
}

fn verify(a: VerifyArgs) -> Result<Outcome> {
    let opts = solver_options(&a.tol)?;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let mut inp = Inputs {
        tol_gap: Some(a.tol.tol_gap),
        tol_feas: Some(a.tol.tol_feas),
        ..Inputs::default()
    };
    let mut logged: Vec<(String, QuantifierResult)> = Vec::new();

    if let Some(p) = &a.objects.state {
        let rho = inputs::state(p)?;
        let desc = inputs::state_descriptor(&a.objects.free, rho.dim())?;
        let fs = inputs::free_states(&desc)?;
        let r = robustness_state_with(&rho, &fs, &opts)?;
        let w = weight_state_with(&rho, &fs, &opts)?;
        checks.push(Check::close("state robustness duality", r.value, robustness_state_dual(&rho, &fs)?.value, DUALITY_TOL));
        checks.push(Check::close("state weight duality", w.value, weight_state_dual(&rho, &fs)?.value, DUALITY_TOL));
        checks.push(Check::at_most("state robustness witness", r.witness_violation_state(&fs)?, WITNESS_TOL));
        checks.push(Check::at_most("state weight witness", w.witness_violation_state(&fs)?, WITNESS_TOL));
        if a.oracle {
            match (&desc, state_grid(rho.dim())) {
                (FreeSetDescriptor::Incoherent { .. }, Some((res, tol))) => {
                    let grid = GridSpec::new(res)?;
                    let rg = grid_robustness_state_incoherent(&rho, &grid)?;
                    let wg = grid_weight_state_incoherent(&rho, &grid)?;
                    checks.push(Check::bracket("state robustness grid", r.value, rg, tol));
                    checks.push(Check::bracket("state weight grid", w.value, wg, tol));
                }
                _ => skipped.push("state grid oracle: needs incoherent states of dimension 2 or 3".into()),
            }
        }
        logged.push(("robustness-state".into(), r));
        logged.push(("weight-state".into(), w));
        inp.state = Some(rho);
        inp.free = Some(desc);
    }

    if let Some(p) = &a.objects.povm {
        let m = inputs::povm(p)?;
        let desc = inputs::measurement_descriptor(&a.objects.mfree, m.dim(), m.outcomes())?;
        let fm = inputs::free_measurements(&desc)?;
        let r = robustness_measurement_with(&m, &fm, &opts)?;
        let w = weight_measurement_with(&m, &fm, &opts)?;
        checks.push(Check::close(
            "measurement robustness duality",
            r.value,
            robustness_measurement_dual(&m, &fm)?.value,
            DUALITY_TOL,
        ));
        checks.push(Check::close(
            "measurement weight duality",
            w.value,
            weight_measurement_dual(&m, &fm)?.value,
            DUALITY_TOL,
        ));
        checks.push(Check::at_most("measurement robustness witness", r.witness_violation_measurement(&fm)?, WITNESS_TOL));
        checks.push(Check::at_most("measurement weight witness", w.witness_violation_measurement(&fm)?, WITNESS_TOL));
        if a.oracle {
            match (&desc, m.dim(), povm_grid(m.outcomes())) {
                (FreeSetDescriptor::Trivial { .. }, 2, Some((res, tol))) => {
                    let grid = GridSpec::new(res)?;
                    let rg = grid_robustness_povm_qubit_trivial(&m, &grid)?;
                    let wg = grid_weight_povm_qubit_trivial(&m, &grid)?;
                    checks.push(Check::bracket("measurement robustness grid", r.value, rg, tol));
                    checks.push(Check::bracket("measurement weight grid", w.value, wg, tol));
                }
                _ => skipped.push("measurement grid oracle: needs trivial qubit measurements with 2 or 3 outcomes".into()),
            }
        }
        logged.push(("robustness-measurement".into(), r));
        logged.push(("weight-measurement".into(), w));
        inp.povm = Some(m);
        inp.mfree = Some(desc);
    }

    if let Some(gp) = &a.game {
        let game = Game::load(gp)?;
        let kind = game.kind(a.kind)?;
        match (&inp.state, &inp.povm) {
            (Some(rho), Some(m)) if a.oracle => {
                let e = game.evaluate(rho, m, kind)?;
                let inst = game.instrument()?;
                match enumerate_post_processings(inst.subchannels(), rho, m, kind) {
                    Ok((best, _)) => checks.push(Check::close("game value enumeration", e.value, best, ENUMERATION_TOL)),
                    Err(err) => skipped.push(format!("game enumeration: {err}")),
                }
            }
            (Some(_), Some(_)) => skipped.push("game enumeration: needs --oracle".into()),
            _ => bail!("--game needs both --state and --povm"),
        }
        inp.kind = Some(kind_name(kind).into());
        inp.game = Some(game);
    }

    if inp.state.is_none() && inp.povm.is_none() {
        bail!("verify needs --state and/or --povm");
    }
    let solves: Vec<(&str, &QuantifierResult)> = logged.iter().map(|(n, r)| (n.as_str(), r)).collect();
    write_solver_log(&a.tol, &solves).context("solver log")?;
    let holds = checks.iter().all(|c| c.passed);
    finish(&a.common, "verify", &inp, Some(holds), VerifyReport { checks, skipped })
}
