use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blueprint::{build_discrimination_game, build_exclusion_game, default_n};
use super::seesaw::free_pair_optimum;
use super::{evaluate_subchannels, GameKind};
use crate::error::{Error, Result};
use crate::free_sets::{FreeMeasurementSet, FreeStateSet};
use crate::linalg::{DensityMatrix, Povm};
use crate::quantifiers::{
    robustness_measurement, robustness_state, weight_measurement, weight_state, Decomposition, QuantifierResult,
};
use crate::random;

/// Robustness below this counts as free for the advantage statement.
pub const RESOURCE_THRESHOLD: f64 = 1e-6;
/// Slack allowed in the bound chains checked on random games.
pub const CHAIN_TOL: f64 = 1e-7;
/// Slack allowed when comparing the blueprint ratio with the robustness product.
pub const RATIO_TOL: f64 = 1e-7;
/// Allowed deviation of the exclusion ratio from the weight product.
pub const EXCLUSION_RATIO_TOL: f64 = 1e-5;
const SEESAW_RESTARTS: usize = 2;
const MAX_N: f64 = 1e15;

struct Quantified {
    rs: QuantifierResult,
    rm: QuantifierResult,
    ws: QuantifierResult,
    wm: QuantifierResult,
}

impl Quantified {
    fn compute(rho: &DensityMatrix, m: &Povm, fs: &FreeStateSet, fm: &FreeMeasurementSet) -> Result<Self> {
        Ok(Self {
            rs: robustness_state(rho, fs)?,
            rm: robustness_measurement(m, fm)?,
            ws: weight_state(rho, fs)?,
            wm: weight_measurement(m, fm)?,
        })
    }

    fn robustness_product(&self) -> f64 {
        (1.0 + self.rs.value) * (1.0 + self.rm.value)
    }

    fn weight_product(&self) -> f64 {
        (1.0 - self.ws.value) * (1.0 - self.wm.value)
    }
}

fn free_state(d: &Decomposition) -> &DensityMatrix {
    match d {
        Decomposition::State { free, .. } => free,
        Decomposition::Measurement { .. } => unreachable!("state quantifier"),
    }
}

fn free_povm(d: &Decomposition) -> &Povm {
    match d {
        Decomposition::Measurement { free, .. } => free,
        Decomposition::State { .. } => unreachable!("measurement quantifier"),
    }
}

/// Strict advantage of a fully resourceful pair in both games.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Result1Report {
    pub robustness_state: f64,
    pub robustness_measurement: f64,
    pub weight_state: f64,
    pub weight_measurement: f64,
    pub n: usize,
    pub alpha: f64,
    pub discrimination_value: f64,
    /// `alpha + 1/n`, an upper bound on every free pair's success probability.
    pub discrimination_free_bound: f64,
    /// `value / (alpha + 1/n) - 1`.
    pub discrimination_gap: f64,
    pub beta: f64,
    pub exclusion_value: f64,
    /// `beta`, a lower bound on every free pair's error probability.
    pub exclusion_free_bound: f64,
    /// `1 - value / beta`.
    pub exclusion_gap: f64,
    pub holds: bool,
}

/// Builds the witness games for `(rho, M)` and reports the advantage over
/// all free pairs. Requires both objects to be resourceful.
pub fn certify_result1(
    rho: &DensityMatrix,
    m: &Povm,
    free_states: &FreeStateSet,
    free_measurements: &FreeMeasurementSet,
) -> Result<Result1Report> {
    let q = Quantified::compute(rho, m, free_states, free_measurements)?;
    let state_free = q.rs.value <= RESOURCE_THRESHOLD;
    let meas_free = q.rm.value <= RESOURCE_THRESHOLD;
    match (state_free, meas_free) {
        (true, true) => {
            return Err(Error::Precondition(format!(
                "state and measurement are both free (R = {:.3e}, {:.3e})",
                q.rs.value, q.rm.value
            )))
        }
        (true, false) => return Err(Error::Precondition(format!("state is free (R = {:.3e})", q.rs.value))),
        (false, true) => {
            return Err(Error::Precondition(format!(
                "measurement is free (R = {:.3e})",
                q.rm.value
            )))
        }
        (false, false) => {}
    }

    let product = q.robustness_product();
    let disc_probe = build_discrimination_game(&q.rs.witness[0], &q.rm.witness, 1, None)?;
    let alpha = disc_probe.parameter();
    // keep 1/n well below the advantage alpha (P - 1)
    let n = (1000.0_f64.max(10.0 / (product - 1.0)) / alpha).ceil().min(MAX_N) as usize;
    let disc = build_discrimination_game(&q.rs.witness[0], &q.rm.witness, n, None)?;
    let d_value = disc.evaluate(rho, m)?.value;
    let d_bound = disc.free_bound();

    let excl = build_exclusion_game(&q.ws.witness[0], &q.wm.witness, None)?;
    let e_value = excl.evaluate(rho, m)?.value;
    let beta = excl.parameter();

    let discrimination_gap = d_value / d_bound - 1.0;
    let exclusion_gap = 1.0 - e_value / beta;
    Ok(Result1Report {
        robustness_state: q.rs.value,
        robustness_measurement: q.rm.value,
        weight_state: q.ws.value,
        weight_measurement: q.wm.value,
        n,
        alpha,
        discrimination_value: d_value,
        discrimination_free_bound: d_bound,
        discrimination_gap,
        beta,
        exclusion_value: e_value,
        exclusion_free_bound: beta,
        exclusion_gap,
        holds: discrimination_gap > 0.0 && exclusion_gap > 0.0,
    })
}

/// Bound chains on one random game:
/// `P_succ(rho, M) <= (1+R_rho)(1+R_M) P_succ(sigma*, N*)` and
/// `P_err(rho, M) >= (1-W_rho)(1-W_M) P_err(sigma'*, N'*)`, where the
/// starred pairs are the free parts of the optimal decompositions. The
/// see-saw values, when available, bound the free optimum further.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomGameCheck {
    pub index: usize,
    pub subchannels: usize,
    pub success: f64,
    pub success_free_pair: f64,
    pub success_seesaw: Option<f64>,
    pub success_chain_holds: bool,
    pub error: f64,
    pub error_free_pair: f64,
    pub error_seesaw: Option<f64>,
    pub error_chain_holds: bool,
}

/// Exact quantification through the witness games, plus bound chains on
/// random games.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Result2Report {
    pub robustness_state: f64,
    pub robustness_measurement: f64,
    pub robustness_product: f64,
    pub weight_state: f64,
    pub weight_measurement: f64,
    pub weight_product: f64,
    pub n: usize,
    pub alpha: f64,
    pub discrimination_value: f64,
    /// `value / (alpha + 1/n)`.
    pub ratio_lower: f64,
    /// `value / alpha`.
    pub ratio_upper: f64,
    /// `1 / (1 + n alpha)`; the lower end is at least `P (1 - epsilon_n)`.
    pub epsilon_n: f64,
    /// `(ratio_upper - ratio_lower) / robustness_product`.
    pub relative_width: f64,
    pub discrimination_contains: bool,
    pub beta: f64,
    pub exclusion_value: f64,
    /// `value / beta`.
    pub exclusion_ratio: f64,
    pub exclusion_matches: bool,
    pub random_games: Vec<RandomGameCheck>,
    pub chains_hold: bool,
    pub holds: bool,
}

pub fn certify_result2<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    m: &Povm,
    free_states: &FreeStateSet,
    free_measurements: &FreeMeasurementSet,
    n: Option<usize>,
    random_games: usize,
    rng: &mut R,
) -> Result<Result2Report> {
    let q = Quantified::compute(rho, m, free_states, free_measurements)?;
    let product = q.robustness_product();
    let weight_product = q.weight_product();

    let probe = build_discrimination_game(&q.rs.witness[0], &q.rm.witness, 1, None)?;
    let n = n.unwrap_or_else(|| default_n(probe.parameter()));
    let disc = build_discrimination_game(&q.rs.witness[0], &q.rm.witness, n, None)?;
    let alpha = disc.parameter();
    let d_value = disc.evaluate(rho, m)?.value;
    let ratio_lower = d_value / disc.free_bound();
    let ratio_upper = d_value / alpha;
    let tol = RATIO_TOL * product.max(1.0);
    let discrimination_contains = ratio_lower <= product + tol && product <= ratio_upper + tol;

    let excl = build_exclusion_game(&q.ws.witness[0], &q.wm.witness, None)?;
    let beta = excl.parameter();
    let e_value = excl.evaluate(rho, m)?.value;
    let exclusion_ratio = e_value / beta;
    let exclusion_matches = (exclusion_ratio - weight_product).abs() <= EXCLUSION_RATIO_TOL;

    let sigma_r = free_state(&q.rs.decomposition);
    let n_r = free_povm(&q.rm.decomposition);
    let sigma_w = free_state(&q.ws.decomposition);
    let n_w = free_povm(&q.wm.decomposition);
    let seesaw_ok = free_states.is_builtin() && free_measurements.is_builtin();

    let mut checks = Vec::with_capacity(random_games);
    for index in 0..random_games {
        let k = rng.random_range(2..=3);
        let game = random::instrument(rho.dim(), m.dim(), k, rng);
        let subs = game.subchannels();
        let success = evaluate_subchannels(subs, rho, m, GameKind::Discrimination)?.value;
        let success_free_pair = evaluate_subchannels(subs, sigma_r, n_r, GameKind::Discrimination)?.value;
        let error = evaluate_subchannels(subs, rho, m, GameKind::Exclusion)?.value;
        let error_free_pair = evaluate_subchannels(subs, sigma_w, n_w, GameKind::Exclusion)?.value;
        let (success_seesaw, error_seesaw) = if seesaw_ok {
            let s = free_pair_optimum(
                subs,
                GameKind::Discrimination,
                free_states,
                free_measurements,
                std::slice::from_ref(sigma_r),
                SEESAW_RESTARTS,
                rng,
            )?;
            let e = free_pair_optimum(
                subs,
                GameKind::Exclusion,
                free_states,
                free_measurements,
                std::slice::from_ref(sigma_w),
                SEESAW_RESTARTS,
                rng,
            )?;
            (Some(s.value), Some(e.value))
        } else {
            (None, None)
        };
        let success_chain_holds = success <= product * success_free_pair + CHAIN_TOL
            && success_seesaw.is_none_or(|s| success_free_pair <= s + CHAIN_TOL);
        let error_chain_holds = error >= weight_product * error_free_pair - CHAIN_TOL
            && error_seesaw.is_none_or(|e| error_free_pair >= e - CHAIN_TOL);
        checks.push(RandomGameCheck {
            index,
            subchannels: k,
            success,
            success_free_pair,
            success_seesaw,
            success_chain_holds,
            error,
            error_free_pair,
            error_seesaw,
            error_chain_holds,
        });
    }
    let chains_hold = checks.iter().all(|c| c.success_chain_holds && c.error_chain_holds);
    Ok(Result2Report {
        robustness_state: q.rs.value,
        robustness_measurement: q.rm.value,
        robustness_product: product,
        weight_state: q.ws.value,
        weight_measurement: q.wm.value,
        weight_product,
        n,
        alpha,
        discrimination_value: d_value,
        ratio_lower,
        ratio_upper,
        epsilon_n: 1.0 / (1.0 + n as f64 * alpha),
        relative_width: (ratio_upper - ratio_lower) / product,
        discrimination_contains,
        beta,
        exclusion_value: e_value,
        exclusion_ratio,
        exclusion_matches,
        random_games: checks,
        chains_hold,
        holds: discrimination_contains && exclusion_matches && chains_hold,
    })
}
