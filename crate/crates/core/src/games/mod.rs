//! Subchannel discrimination and exclusion games.
//!
//! A game is a set of subchannels `{Psi_x}` summing to a channel. A player
//! holding `(rho, M)` measures `Psi_x(rho)` and guesses `x` by a classical
//! post-processing of the outcome; for a fixed pair the optimal
//! post-processing is deterministic.

mod blueprint;
mod certify;
mod seesaw;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, HermitianOperator, Povm, Subchannel, SubchannelSet};

pub use blueprint::{build_discrimination_game, build_exclusion_game, default_n, GameBlueprint};
pub use certify::{
    certify_result1, certify_result2, RandomGameCheck, Result1Report, Result2Report, RESOURCE_THRESHOLD,
};
pub use seesaw::{free_pair_optimum, FreePairOptimum, SEESAW_STALL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Discrimination,
    Exclusion,
}

/// Game value together with the optimal deterministic post-processing
/// `outcome a -> guess post_processing[a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub post_processing: Vec<usize>,
}

/// Table `t[a][x] = Tr[M_a Psi_x(rho)]`.
pub(crate) fn payoff_table(subs: &[Subchannel], rho: &DensityMatrix, m: &Povm) -> Result<Vec<Vec<f64>>> {
    let first = subs.first().ok_or_else(|| Error::invalid("game has no subchannels"))?;
    if first.d_in() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "game input vs state",
            expected: first.d_in(),
            got: rho.dim(),
        });
    }
    if first.d_out() != m.dim() {
        return Err(Error::DimensionMismatch {
            context: "game output vs POVM",
            expected: first.d_out(),
            got: m.dim(),
        });
    }
    let outs: Vec<HermitianOperator> = subs.iter().map(|s| s.apply_op(rho.op())).collect::<Result<_>>()?;
    Ok(m.elements()
        .iter()
        .map(|ma| outs.iter().map(|o| ma.pair(o)).collect())
        .collect())
}

pub(crate) fn evaluate_subchannels(
    subs: &[Subchannel],
    rho: &DensityMatrix,
    m: &Povm,
    kind: GameKind,
) -> Result<Evaluation> {
    let table = payoff_table(subs, rho, m)?;
    let mut value = 0.0;
    let mut post_processing = Vec::with_capacity(table.len());
    for row in &table {
        let mut best = 0;
        for (x, &v) in row.iter().enumerate() {
            let better = match kind {
                GameKind::Discrimination => v > row[best],
                GameKind::Exclusion => v < row[best],
            };
            if better {
                best = x;
            }
        }
        value += row[best];
        post_processing.push(best);
    }
    Ok(Evaluation { value, post_processing })
}

/// `P_succ = sum_a max_x Tr[M_a Psi_x(rho)]`; ties pick the lowest `x`.
pub fn eval_discrimination(game: &SubchannelSet, rho: &DensityMatrix, m: &Povm) -> Result<Evaluation> {
    evaluate_subchannels(game.subchannels(), rho, m, GameKind::Discrimination)
}

/// `P_err = sum_a min_x Tr[M_a Psi_x(rho)]`; ties pick the lowest `x`.
pub fn eval_exclusion(game: &SubchannelSet, rho: &DensityMatrix, m: &Povm) -> Result<Evaluation> {
    evaluate_subchannels(game.subchannels(), rho, m, GameKind::Exclusion)
}

pub fn evaluate(game: &SubchannelSet, rho: &DensityMatrix, m: &Povm, kind: GameKind) -> Result<Evaluation> {
    evaluate_subchannels(game.subchannels(), rho, m, kind)
}

/// Keeps the first `k - 1` elements and merges the rest into element `k - 1`.
pub fn cpp_coarse_grain(n: &Povm, k: usize) -> Result<Povm> {
    if k == 0 || k > n.outcomes() {
        return Err(Error::invalid(format!(
            "cannot coarse-grain {} outcomes into {k}",
            n.outcomes()
        )));
    }
    if k == n.outcomes() {
        return Ok(n.clone());
    }
    let stochastic: Vec<Vec<f64>> = (0..n.outcomes())
        .map(|a| {
            let mut row = vec![0.0; k];
            row[a.min(k - 1)] = 1.0;
            row
        })
        .collect();
    n.post_process(&stochastic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dephasing_game() -> SubchannelSet {
        let p0 = HermitianOperator::basis_projector(2, 0);
        let p1 = HermitianOperator::basis_projector(2, 1);
        // eta -> |i><i| eta |i><i| has Choi |ii><ii|
        let s0 = Subchannel::from_choi(p0.kron(&p0), 2, 2).unwrap();
        let s1 = Subchannel::from_choi(p1.kron(&p1), 2, 2).unwrap();
        SubchannelSet::new(vec![s0, s1]).unwrap()
    }

    #[test]
    fn relabelling_game_values() {
        let g = SubchannelSet::relabelling(2, &[0.7, 0.3]).unwrap();
        for (rho, m) in [
            (DensityMatrix::plus(), Povm::computational(2)),
            (DensityMatrix::maximally_mixed(2), Povm::trivial(2, &[0.2, 0.8]).unwrap()),
        ] {
            assert!((eval_discrimination(&g, &rho, &m).unwrap().value - 0.7).abs() < 1e-12);
            assert!((eval_exclusion(&g, &rho, &m).unwrap().value - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn perfectly_correlated_outcomes() {
        let e = eval_discrimination(&dephasing_game(), &DensityMatrix::plus(), &Povm::computational(2)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert_eq!(e.post_processing, vec![0, 1]);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let g = SubchannelSet::relabelling(2, &[0.5, 0.5]).unwrap();
        let e = eval_discrimination(&g, &DensityMatrix::plus(), &Povm::computational(2)).unwrap();
        assert_eq!(e.post_processing, vec![0, 0]);
        let e = eval_exclusion(&g, &DensityMatrix::plus(), &Povm::computational(2)).unwrap();
        assert_eq!(e.post_processing, vec![0, 0]);
    }

    #[test]
    fn dimension_mismatch() {
        let g = SubchannelSet::relabelling(2, &[0.5, 0.5]).unwrap();
        assert!(matches!(
            eval_discrimination(&g, &DensityMatrix::maximally_mixed(3), &Povm::computational(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coarse_graining() {
        let n = Povm::computational(3);
        let c = cpp_coarse_grain(&n, 2).unwrap();
        assert_eq!(c.outcomes(), 2);
        assert!(c.element(1).max_abs_diff(&HermitianOperator::diag(&[0.0, 1.0, 1.0])) < 1e-15);
        assert_eq!(cpp_coarse_grain(&n, 3).unwrap(), n);
        assert!(cpp_coarse_grain(&n, 4).is_err());
        let t = cpp_coarse_grain(&Povm::trivial(2, &[0.2, 0.3, 0.5]).unwrap(), 2).unwrap();
        assert!(t.element(1).max_abs_diff(&HermitianOperator::identity(2).scale(0.8)) < 1e-15);
    }
}
