use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_subchannels, GameKind};
use crate::error::{Error, Result};
use crate::free_sets::{FreeMeasurementSet, FreeStateSet, MEMBERSHIP_TOL};
use crate::linalg::{DensityMatrix, HermitianOperator, Povm, Subchannel};
use crate::random;

/// A see-saw run stops once an iteration improves by less than this.
pub const SEESAW_STALL: f64 = 1e-9;
const SEESAW_MAX_ITER: usize = 100;

/// Best free pair found by alternating optimisation over free states and
/// free measurements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreePairOptimum {
    pub value: f64,
    pub state: DensityMatrix,
    pub povm: Povm,
    pub post_processing: Vec<usize>,
    pub starts: usize,
    pub iterations: usize,
}

/// Runs the see-saw from each of `starts`, the maximally mixed state (when
/// free) and `restarts` random free states, returning the best pair.
/// Discrimination maximises the success probability, exclusion minimises
/// the error probability. The result is a lower (resp. upper) bound on the
/// true free-pair optimum.
pub fn free_pair_optimum<R: Rng + ?Sized>(
    subchannels: &[Subchannel],
    kind: GameKind,
    free_states: &FreeStateSet,
    free_measurements: &FreeMeasurementSet,
    starts: &[DensityMatrix],
    restarts: usize,
    rng: &mut R,
) -> Result<FreePairOptimum> {
    let first = subchannels.first().ok_or_else(|| Error::invalid("game has no subchannels"))?;
    if first.d_in() != free_states.dim() {
        return Err(Error::DimensionMismatch {
            context: "game input vs free state set",
            expected: first.d_in(),
            got: free_states.dim(),
        });
    }
    if first.d_out() != free_measurements.dim() {
        return Err(Error::DimensionMismatch {
            context: "game output vs free measurement set",
            expected: first.d_out(),
            got: free_measurements.dim(),
        });
    }
    let fm = free_measurements.with_outcomes(subchannels.len())?;
    let sign = match kind {
        GameKind::Discrimination => 1.0,
        GameKind::Exclusion => -1.0,
    };

    let mut initial: Vec<DensityMatrix> = starts.to_vec();
    let mixed = DensityMatrix::maximally_mixed(free_states.dim());
    if free_states.membership(&mixed, MEMBERSHIP_TOL)?.is_member {
        initial.push(mixed);
    }
    for _ in 0..restarts {
        initial.push(random::free_state(free_states, rng)?);
    }
    if initial.is_empty() {
        initial.push(random::free_state(free_states, rng)?);
    }

    let mut best: Option<FreePairOptimum> = None;
    let n_starts = initial.len();
    for start in initial {
        let mut sigma = start;
        let mut prev = f64::NEG_INFINITY;
        let mut povm = None;
        let mut iterations = 0;
        for _ in 0..SEESAW_MAX_ITER {
            iterations += 1;
            let outs: Vec<HermitianOperator> = subchannels
                .iter()
                .map(|s| s.apply_op(sigma.op()).map(|o| o.scale(sign)))
                .collect::<Result<_>>()?;
            let (_, n) = fm.maximise_linear(&outs)?;
            let mut d = HermitianOperator::zeros(sigma.dim());
            for (s, nx) in subchannels.iter().zip(n.elements()) {
                d = &d + &s.adjoint_op(nx)?;
            }
            let (v, next) = free_states.maximise_linear(&d.scale(sign))?;
            sigma = next;
            povm = Some(n);
            if v - prev <= SEESAW_STALL {
                break;
            }
            prev = v;
        }
        let povm = povm.expect("at least one iteration");
        let eval = evaluate_subchannels(subchannels, &sigma, &povm, kind)?;
        let better = best.as_ref().is_none_or(|b| sign * eval.value > sign * b.value);
        if better {
            best = Some(FreePairOptimum {
                value: eval.value,
                state: sigma,
                povm,
                post_processing: eval.post_processing,
                starts: n_starts,
                iterations,
            });
        }
    }
    Ok(best.expect("at least one start"))
}
