//! Order-(+inf) and order-(-inf) entropies of the encoding-decoding task,
//! in bits.
//!
//! Extended-real conventions: `H_-inf(X|G) = +inf` when `sum_g min_x p(x,g)`
//! is zero, and then `I_-inf = +inf`. Infinities serialise as `"inf"`. When a
//! pair and its free comparison both have `I_-inf = +inf`, their difference
//! is taken as 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_sets::{FreeMeasurementSet, FreeStateSet};
use crate::games::{eval_discrimination, eval_exclusion, free_pair_optimum, GameKind};
use crate::linalg::{ChannelEnsemble, DensityMatrix, Povm};
use crate::quantifiers::{
    robustness_measurement, robustness_state, weight_measurement, weight_state, Decomposition,
};

const JOINT_TOL: f64 = 1e-10;
/// Slack for the per-ensemble information bounds.
pub const INFO_BOUND_TOL: f64 = 1e-6;
const SEESAW_RESTARTS: usize = 2;

/// Serde helpers writing infinities as `"inf"` / `"-inf"`.
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("expected number or \"inf\", got \"{other}\""))),
            },
        }
    }
}

/// `p(x, g)` for message `x` and guess `g`, with the prior `p(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointJson", into = "JointJson")]
pub struct JointDistribution {
    probs: Vec<Vec<f64>>,
    prior: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointJson {
    probs: Vec<Vec<f64>>,
    prior: Vec<f64>,
}

impl TryFrom<JointJson> for JointDistribution {
    type Error = Error;
    fn try_from(j: JointJson) -> Result<Self> {
        Self::new(j.probs, j.prior)
    }
}

impl From<JointDistribution> for JointJson {
    fn from(j: JointDistribution) -> Self {
        JointJson {
            probs: j.probs,
            prior: j.prior,
        }
    }
}

impl JointDistribution {
    pub fn new(probs: Vec<Vec<f64>>, prior: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.len() != prior.len() {
            return Err(Error::invalid("joint distribution needs one row per prior entry"));
        }
        let o = probs[0].len();
        if o == 0 || probs.iter().any(|r| r.len() != o) {
            return Err(Error::invalid("joint distribution rows must have equal, nonzero length"));
        }
        if probs.iter().flatten().chain(&prior).any(|&v| !v.is_finite() || v < -JOINT_TOL) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > JOINT_TOL {
            return Err(Error::invalid(format!("joint distribution sums to {total}")));
        }
        for (x, (row, &p)) in probs.iter().zip(&prior).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - p).abs() > JOINT_TOL {
                return Err(Error::invalid(format!("row {x} sums to {s}, prior is {p}")));
            }
        }
        let clamp = |v: f64| v.max(0.0);
        Ok(Self {
            probs: probs.into_iter().map(|r| r.into_iter().map(clamp).collect()).collect(),
            prior: prior.into_iter().map(clamp).collect(),
        })
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn messages(&self) -> usize {
        self.prior.len()
    }

    pub fn guesses(&self) -> usize {
        self.probs[0].len()
    }

    fn column_extreme(&self, pick: fn(f64, f64) -> f64, init: f64) -> f64 {
        (0..self.guesses())
            .map(|g| self.probs.iter().map(|r| r[g]).fold(init, pick))
            .sum()
    }

    /// `sum_g max_x p(x, g)`.
    pub fn guess_success(&self) -> f64 {
        self.column_extreme(f64::max, f64::NEG_INFINITY)
    }

    /// `sum_g min_x p(x, g)`.
    pub fn guess_error(&self) -> f64 {
        self.column_extreme(f64::min, f64::INFINITY)
    }

    /// Merges guess columns `a` and `b` into `a`.
    pub fn merge_guesses(&self, a: usize, b: usize) -> Result<Self> {
        let o = self.guesses();
        if a >= o || b >= o || a == b {
            return Err(Error::invalid(format!("cannot merge guesses {a} and {b} of {o}")));
        }
        let probs = self
            .probs
            .iter()
            .map(|r| {
                (0..o)
                    .filter(|&g| g != b)
                    .map(|g| if g == a { r[a] + r[b] } else { r[g] })
                    .collect()
            })
            .collect();
        Self::new(probs, self.prior.clone())
    }
}

/// `p(x, g) = p(x) Tr[M_g Lambda_x(rho)]`.
pub fn joint_from_task(ensemble: &ChannelEnsemble, rho: &DensityMatrix, m: &Povm) -> Result<JointDistribution> {
    if ensemble.d_in() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "ensemble input vs state",
            expected: ensemble.d_in(),
            got: rho.dim(),
        });
    }
    if ensemble.d_out() != m.dim() {
        return Err(Error::DimensionMismatch {
            context: "ensemble output vs POVM",
            expected: ensemble.d_out(),
            got: m.dim(),
        });
    }
    let mut probs = Vec::with_capacity(ensemble.len());
    for (ch, &p) in ensemble.channels().iter().zip(ensemble.prior()) {
        let out = ch.apply_op(rho.op())?;
        probs.push(m.elements().iter().map(|mg| (p * mg.pair(&out)).max(0.0)).collect::<Vec<_>>());
    }
    // absorb rounding so rows match the prior exactly
    for (row, &p) in probs.iter_mut().zip(ensemble.prior()) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v *= p / s);
        }
    }
    JointDistribution::new(probs, ensemble.prior().to_vec())
}

/// `H_+inf(X) = -log2 max_x p(x)`.
pub fn entropy_plus(j: &JointDistribution) -> f64 {
    -j.prior.iter().copied().fold(0.0, f64::max).log2()
}

/// `H_+inf(X|G) = -log2 sum_g max_x p(x, g)`.
pub fn conditional_entropy_plus(j: &JointDistribution) -> f64 {
    -j.guess_success().log2()
}

/// `H_-inf(X) = -log2 min_x p(x)`; `+inf` when some message has zero prior.
pub fn entropy_minus(j: &JointDistribution) -> f64 {
    let m = j.prior.iter().copied().fold(f64::INFINITY, f64::min);
    if m <= 0.0 {
        f64::INFINITY
    } else {
        -m.log2()
    }
}

/// `H_-inf(X|G) = -log2 sum_g min_x p(x, g)`; `+inf` when that sum is 0.
pub fn conditional_entropy_minus(j: &JointDistribution) -> f64 {
    let e = j.guess_error();
    if e <= 0.0 {
        f64::INFINITY
    } else {
        -e.log2()
    }
}

/// `I_+inf = log2(sum_g max_x p(x,g) / max_x p(x))`, in `[0, log2 k]`.
pub fn mutual_info_plus(j: &JointDistribution) -> f64 {
    let pmax = j.prior.iter().copied().fold(0.0, f64::max);
    (j.guess_success() / pmax).log2().max(0.0)
}

/// `I_-inf = log2(min_x p(x) / sum_g min_x p(x,g))`; `+inf` exactly when
/// `sum_g min_x p(x,g) = 0`.
pub fn mutual_info_minus(j: &JointDistribution) -> f64 {
    let e = j.guess_error();
    if e <= 0.0 {
        return f64::INFINITY;
    }
    let pmin = j.prior.iter().copied().fold(f64::INFINITY, f64::min);
    (pmin / e).log2().max(0.0)
}

/// `a - b` with `inf - inf = 0`.
fn extended_difference(a: f64, b: f64) -> f64 {
    if a.is_infinite() && a == b {
        0.0
    } else {
        a - b
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleCheck {
    pub index: usize,
    pub channels: usize,
    pub info_plus: f64,
    /// Largest `I_+inf` over the free pairs tried.
    pub info_plus_free: f64,
    pub info_plus_gap: f64,
    pub plus_holds: bool,
    #[serde(with = "extended_real")]
    pub info_minus: f64,
    #[serde(with = "extended_real")]
    pub info_minus_free: f64,
    #[serde(with = "extended_real")]
    pub info_minus_gap: f64,
    pub minus_holds: bool,
    /// `|H_+inf(X|G) + log2 P_succ|` against the game value.
    pub identity_plus_error: f64,
    /// `|H_-inf(X|G) + log2 P_err|` against the game value.
    pub identity_minus_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Result3Report {
    pub robustness_state: f64,
    pub robustness_measurement: f64,
    pub weight_state: f64,
    pub weight_measurement: f64,
    /// `log2(1 + R_rho) + log2(1 + R_M)`.
    pub bound_plus: f64,
    /// `-log2(1 - W_rho) - log2(1 - W_M)`.
    #[serde(with = "extended_real")]
    pub bound_minus: f64,
    pub ensembles: Vec<EnsembleCheck>,
    pub holds: bool,
}

fn free_parts<'a>(d: &'a Decomposition, e: &'a Decomposition) -> (&'a DensityMatrix, &'a Povm) {
    match (d, e) {
        (Decomposition::State { free: s, .. }, Decomposition::Measurement { free: n, .. }) => (s, n),
        _ => unreachable!("state then measurement decomposition"),
    }
}

/// Checks the single-shot information bounds on each supplied ensemble. Free
/// comparisons use the free parts of the optimal decompositions and, for the
/// built-in sets, a see-saw started from them.
pub fn certify_result3<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    m: &Povm,
    free_states: &FreeStateSet,
    free_measurements: &FreeMeasurementSet,
    ensembles: &[ChannelEnsemble],
    rng: &mut R,
) -> Result<Result3Report> {
    let rs = robustness_state(rho, free_states)?;
    let rm = robustness_measurement(m, free_measurements)?;
    let ws = weight_state(rho, free_states)?;
    let wm = weight_measurement(m, free_measurements)?;
    let bound_plus = (1.0 + rs.value).log2() + (1.0 + rm.value).log2();
    let bound_minus = -(1.0 - ws.value).log2() - (1.0 - wm.value).log2();
    let (sigma_r, n_r) = free_parts(&rs.decomposition, &rm.decomposition);
    let (sigma_w, n_w) = free_parts(&ws.decomposition, &wm.decomposition);
    let seesaw = free_states.is_builtin() && free_measurements.is_builtin();

    let mut checks = Vec::with_capacity(ensembles.len());
    for (index, ens) in ensembles.iter().enumerate() {
        let joint = joint_from_task(ens, rho, m)?;
        let info_plus = mutual_info_plus(&joint);
        let info_minus = mutual_info_minus(&joint);

        let game = ens.as_game()?;
        let p_succ = eval_discrimination(&game, rho, m)?.value;
        let p_err = eval_exclusion(&game, rho, m)?.value;
        let identity_plus_error = (conditional_entropy_plus(&joint) + p_succ.log2()).abs();
        let identity_minus_error = {
            let h = conditional_entropy_minus(&joint);
            let target = if p_err <= 0.0 { f64::INFINITY } else { -p_err.log2() };
            if h.is_infinite() && target.is_infinite() {
                0.0
            } else {
                (h - target).abs()
            }
        };

        let mut info_plus_free = mutual_info_plus(&joint_from_task(ens, sigma_r, n_r)?);
        let mut info_minus_free = mutual_info_minus(&joint_from_task(ens, sigma_w, n_w)?);
        if seesaw {
            let subs = game.subchannels();
            let s = free_pair_optimum(
                subs,
                GameKind::Discrimination,
                free_states,
                free_measurements,
                std::slice::from_ref(sigma_r),
                SEESAW_RESTARTS,
                rng,
            )?;
            let pmax = ens.prior().iter().copied().fold(0.0, f64::max);
            info_plus_free = info_plus_free.max((s.value / pmax).log2().max(0.0));
            let e = free_pair_optimum(
                subs,
                GameKind::Exclusion,
                free_states,
                free_measurements,
                std::slice::from_ref(sigma_w),
                SEESAW_RESTARTS,
                rng,
            )?;
            let pmin = ens.prior().iter().copied().fold(f64::INFINITY, f64::min);
            let seesaw_minus = if e.value <= 0.0 { f64::INFINITY } else { (pmin / e.value).log2().max(0.0) };
            info_minus_free = info_minus_free.max(seesaw_minus);
        }
        let info_plus_gap = info_plus - info_plus_free;
        let info_minus_gap = extended_difference(info_minus, info_minus_free);
        checks.push(EnsembleCheck {
            index,
            channels: ens.len(),
            info_plus,
            info_plus_free,
            info_plus_gap,
            plus_holds: info_plus_gap <= bound_plus + INFO_BOUND_TOL,
            info_minus,
            info_minus_free,
            info_minus_gap,
            minus_holds: bound_minus == f64::INFINITY || info_minus_gap <= bound_minus + INFO_BOUND_TOL,
            identity_plus_error,
            identity_minus_error,
        });
    }
    let holds = checks.iter().all(|c| c.plus_holds && c.minus_holds);
    Ok(Result3Report {
        robustness_state: rs.value,
        robustness_measurement: rm.value,
        weight_state: ws.value,
        weight_measurement: wm.value,
        bound_plus,
        bound_minus,
        ensembles: checks,
        holds,
    })
}
