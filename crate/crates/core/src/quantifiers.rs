//! Generalised robustness and weight of states and measurements.
//!
//! Each quantifier is computed from a linear reparametrisation of its primal
//! program (`S = r rho^G`, `T = w rho^G`); the witness is the dual slack of the
//! same solve. The `*_dual` functions solve the dual programs directly from
//! the finite witness constraints of the free set, for cross-checking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_sets::{FreeMeasurementSet, FreeStateSet};
use crate::linalg::{DensityMatrix, HermitianOperator, Povm};
use crate::sdp::{
    self, BlockId, ConicProgram, IterationRecord, LinearExpr, Sense, SolverOptions, SolverReport, SolverStatus,
};

/// Values within this distance of a boundary (0, or 1 for weights) are snapped
/// onto it.
pub const SNAP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    RobustnessState,
    RobustnessMeasurement,
    WeightState,
    WeightMeasurement,
}

impl Quantity {
    pub fn is_weight(self) -> bool {
        matches!(self, Quantity::WeightState | Quantity::WeightMeasurement)
    }
}

/// `rho + r rho^G = (1 + r) sigma` (robustness) or
/// `rho = w rho^G + (1 - w) sigma` (weight), and the measurement analogues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "object", rename_all = "kebab-case")]
pub enum Decomposition {
    State {
        general: DensityMatrix,
        free: DensityMatrix,
        parameter: f64,
    },
    Measurement {
        general: Povm,
        free: Povm,
        parameter: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolverStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
}

impl From<&SolverReport> for SolveSummary {
    fn from(r: &SolverReport) -> Self {
        Self {
            status: r.status,
            iterations: r.iterations,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            duality_gap: r.duality_gap,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantifierResult {
    pub quantity: Quantity,
    pub value: f64,
    pub decomposition: Decomposition,
    /// `Z` / `Y` for states, `{Z_x}` / `{Y_x}` for measurements.
    pub witness: Vec<HermitianOperator>,
    /// Dual objective of the same solve.
    pub dual_value: f64,
    /// `|value - dual_value|` before snapping.
    pub gap: f64,
    pub solver: SolveSummary,
    /// Per-iteration solver trace; not serialised.
    #[serde(skip)]
    pub solver_log: Vec<IterationRecord>,
}

/// Optimum of a dual program together with its maximiser.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualSolution {
    pub value: f64,
    pub witness: Vec<HermitianOperator>,
    pub solver: SolveSummary,
}

fn snap_robustness(v: f64) -> f64 {
    if v < SNAP_TOL {
        0.0
    } else {
        v
    }
}

fn snap_weight(v: f64) -> f64 {
    if v < SNAP_TOL {
        0.0
    } else if v > 1.0 - SNAP_TOL {
        1.0
    } else {
        v
    }
}

fn check_state_dim(rho: &DensityMatrix, d: usize) -> Result<()> {
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "state vs free set",
            expected: d,
            got: rho.dim(),
        });
    }
    Ok(())
}

fn check_povm_shape(m: &Povm, f: &FreeMeasurementSet) -> Result<()> {
    if m.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            context: "POVM vs free set dimension",
            expected: f.dim(),
            got: m.dim(),
        });
    }
    if m.outcomes() != f.outcomes() {
        return Err(Error::DimensionMismatch {
            context: "POVM vs free set outcomes",
            expected: f.outcomes(),
            got: m.outcomes(),
        });
    }
    Ok(())
}

/// Adds `sum_b sign_b X_b = rhs` entrywise (one equation per element of the
/// orthonormal Hermitian basis).
fn add_matrix_equation(
    prog: &mut ConicProgram,
    terms: &[(BlockId, f64)],
    scalar: Option<(sdp::ScalarId, &HermitianOperator)>,
    rhs: &HermitianOperator,
) {
    for basis in HermitianOperator::hermitian_basis(rhs.dim()) {
        let mut e = LinearExpr::new();
        for &(b, c) in terms {
            e.push_block(b, basis.scale(c));
        }
        if let Some((t, coeff)) = scalar {
            e.push_scalar(t, basis.pair(coeff));
        }
        prog.add_eq(e, basis.pair(rhs));
    }
}

fn solve_optimal(prog: &ConicProgram, opts: &SolverOptions, what: &str) -> Result<SolverReport> {
    sdp::solve(prog, opts)?.require_optimal(what)
}

/// Generalised robustness `R_F(rho)`.
pub fn robustness_state(rho: &DensityMatrix, free: &FreeStateSet) -> Result<QuantifierResult> {
    robustness_state_with(rho, free, &SolverOptions::default())
}

pub fn robustness_state_with(rho: &DensityMatrix, free: &FreeStateSet, opts: &SolverOptions) -> Result<QuantifierResult> {
    let d = free.dim();
    check_state_dim(rho, d)?;
    let mut prog = ConicProgram::new(Sense::Minimize);
    let s = prog.add_block("S", d);
    let t = prog.add_block("T", d);
    prog.set_objective(LinearExpr::new().block(s, HermitianOperator::identity(d)), 0.0);
    // T - S = rho
    add_matrix_equation(&mut prog, &[(t, 1.0), (s, -1.0)], None, rho.op());
    free.add_cone_constraints(&mut prog, t);
    let rep = solve_optimal(&prog, opts, "state robustness")?;

    let raw = rep.objective;
    let value = snap_robustness(raw);
    let s_op = rep.block_values[0].clip_negative();
    let general = if value > 0.0 {
        DensityMatrix::normalised(&s_op)?
    } else {
        rho.clone()
    };
    let free_state = DensityMatrix::normalised(&(rho.op() + &general.op().scale(value)))?;
    Ok(QuantifierResult {
        quantity: Quantity::RobustnessState,
        value,
        decomposition: Decomposition::State {
            general,
            free: free_state,
            parameter: value,
        },
        witness: vec![rep.block_duals[0].clone()],
        dual_value: rep.dual_objective,
        gap: (rep.objective - rep.dual_objective).abs(),
        solver: SolveSummary::from(&rep),
        solver_log: rep.log,
    })
}

/// Weight of resource `W_F(rho)`.
pub fn weight_state(rho: &DensityMatrix, free: &FreeStateSet) -> Result<QuantifierResult> {
    weight_state_with(rho, free, &SolverOptions::default())
}

pub fn weight_state_with(rho: &DensityMatrix, free: &FreeStateSet, opts: &SolverOptions) -> Result<QuantifierResult> {
    let d = free.dim();
    check_state_dim(rho, d)?;
    let mut prog = ConicProgram::new(Sense::Minimize);
    let t = prog.add_block("T", d);
    let sig = prog.add_block("sigma", d);
    prog.set_objective(LinearExpr::new().block(t, HermitianOperator::identity(d)), 0.0);
    add_matrix_equation(&mut prog, &[(t, 1.0), (sig, 1.0)], None, rho.op());
    free.add_cone_constraints(&mut prog, sig);
    let rep = solve_optimal(&prog, opts, "state weight")?;

    let raw = rep.objective;
    let value = snap_weight(raw);
    let general = if value > 0.0 {
        DensityMatrix::normalised(&rep.block_values[0])?
    } else {
        rho.clone()
    };
    let free_state = if value < 1.0 {
        DensityMatrix::normalised(&rep.block_values[1])?
    } else {
        free.maximise_linear(&HermitianOperator::zeros(d))
            .map(|(_, s)| s)
            .unwrap_or_else(|_| DensityMatrix::maximally_mixed(d))
    };
    Ok(QuantifierResult {
        quantity: Quantity::WeightState,
        value,
        decomposition: Decomposition::State {
            general,
            free: free_state,
            parameter: value,
        },
        witness: vec![rep.block_duals[0].clone()],
        dual_value: rep.dual_objective,
        gap: (rep.objective - rep.dual_objective).abs(),
        solver: SolveSummary::from(&rep),
        solver_log: rep.log,
    })
}

/// Generalised robustness `R_F(M)` of a measurement.
pub fn robustness_measurement(m: &Povm, free: &FreeMeasurementSet) -> Result<QuantifierResult> {
    robustness_measurement_with(m, free, &SolverOptions::default())
}

pub fn robustness_measurement_with(m: &Povm, free: &FreeMeasurementSet, opts: &SolverOptions) -> Result<QuantifierResult> {
    check_povm_shape(m, free)?;
    let (d, k) = (m.dim(), m.outcomes());
    let mut prog = ConicProgram::new(Sense::Minimize);
    let s: Vec<BlockId> = (0..k).map(|a| prog.add_block(format!("S{a}"), d)).collect();
    let n: Vec<BlockId> = (0..k).map(|a| prog.add_block(format!("N{a}"), d)).collect();
    let t = prog.add_scalar("t");
    prog.set_objective(LinearExpr::new().scalar(t, 1.0), -1.0);
    for a in 0..k {
        // N_a - S_a = M_a
        add_matrix_equation(&mut prog, &[(n[a], 1.0), (s[a], -1.0)], None, m.element(a));
    }
    let id = HermitianOperator::identity(d);
    let terms: Vec<(BlockId, f64)> = n.iter().map(|&b| (b, 1.0)).collect();
    add_matrix_equation(&mut prog, &terms, Some((t, &id.scale(-1.0))), &HermitianOperator::zeros(d));
    free.add_cone_constraints(&mut prog, &n, t);
    let rep = solve_optimal(&prog, opts, "measurement robustness")?;

    let value = snap_robustness(rep.objective);
    let general = if value > 0.0 {
        let scaled: Vec<HermitianOperator> = (0..k).map(|a| rep.block_values[a].clip_negative()).collect();
        Povm::renormalised(scaled)?
    } else {
        m.clone()
    };
    let free_povm = Povm::renormalised(
        (0..k)
            .map(|a| (m.element(a) + &general.element(a).scale(value)).scale(1.0 / (1.0 + value)))
            .collect(),
    )?;
    Ok(QuantifierResult {
        quantity: Quantity::RobustnessMeasurement,
        value,
        decomposition: Decomposition::Measurement {
            general,
            free: free_povm,
            parameter: value,
        },
        witness: rep.block_duals[..k].to_vec(),
        dual_value: rep.dual_objective,
        gap: (rep.objective - rep.dual_objective).abs(),
        solver: SolveSummary::from(&rep),
        solver_log: rep.log,
    })
}

/// Weight of resource `W_F(M)` of a measurement.
pub fn weight_measurement(m: &Povm, free: &FreeMeasurementSet) -> Result<QuantifierResult> {
    weight_measurement_with(m, free, &SolverOptions::default())
}

pub fn weight_measurement_with(m: &Povm, free: &FreeMeasurementSet, opts: &SolverOptions) -> Result<QuantifierResult> {
    check_povm_shape(m, free)?;
    let (d, k) = (m.dim(), m.outcomes());
    let mut prog = ConicProgram::new(Sense::Minimize);
    let tb: Vec<BlockId> = (0..k).map(|a| prog.add_block(format!("T{a}"), d)).collect();
    let n: Vec<BlockId> = (0..k).map(|a| prog.add_block(format!("N{a}"), d)).collect();
    let t = prog.add_scalar("t");
    prog.set_objective(LinearExpr::new().scalar(t, -1.0), 1.0);
    for a in 0..k {
        add_matrix_equation(&mut prog, &[(tb[a], 1.0), (n[a], 1.0)], None, m.element(a));
    }
    let id = HermitianOperator::identity(d);
    let terms: Vec<(BlockId, f64)> = n.iter().map(|&b| (b, 1.0)).collect();
    add_matrix_equation(&mut prog, &terms, Some((t, &id.scale(-1.0))), &HermitianOperator::zeros(d));
    free.add_cone_constraints(&mut prog, &n, t);
    let rep = solve_optimal(&prog, opts, "measurement weight")?;

    let value = snap_weight(rep.objective);
    let general = if value > 0.0 {
        Povm::renormalised((0..k).map(|a| rep.block_values[a].clone()).collect())?
    } else {
        m.clone()
    };
    let free_povm = if value < 1.0 {
        Povm::renormalised((0..k).map(|a| rep.block_values[k + a].clone()).collect())?
    } else {
        Povm::trivial(d, &vec![1.0 / k as f64; k])
            .ok()
            .filter(|p| free.membership(p, crate::free_sets::MEMBERSHIP_TOL).is_ok_and(|mm| mm.is_member))
            .map(Ok)
            .unwrap_or_else(|| free.maximise_linear(&vec![HermitianOperator::zeros(d); k]).map(|(_, p)| p))?
    };
    Ok(QuantifierResult {
        quantity: Quantity::WeightMeasurement,
        value,
        decomposition: Decomposition::Measurement {
            general,
            free: free_povm,
            parameter: value,
        },
        witness: rep.block_duals[..k].to_vec(),
        dual_value: rep.dual_objective,
        gap: (rep.objective - rep.dual_objective).abs(),
        solver: SolveSummary::from(&rep),
        solver_log: rep.log,
    })
}

/// `max Tr(Z rho) - 1` over `Z >= 0` with `Tr(Z s) <= 1` on the free set.
pub fn robustness_state_dual(rho: &DensityMatrix, free: &FreeStateSet) -> Result<DualSolution> {
    state_dual(rho, free, false)
}

/// `max 1 - Tr(Y rho)` over `Y >= 0` with `Tr(Y s) >= 1` on the free set.
pub fn weight_state_dual(rho: &DensityMatrix, free: &FreeStateSet) -> Result<DualSolution> {
    state_dual(rho, free, true)
}

/// `max sum_x Tr(Z_x M_x) - 1` over `Z_x >= 0` with `sum_x Tr(Z_x N_x) <= 1`
/// on the free set.
pub fn robustness_measurement_dual(m: &Povm, free: &FreeMeasurementSet) -> Result<DualSolution> {
    measurement_dual(m, free, false)
}

/// `max 1 - sum_x Tr(Y_x M_x)` over `Y_x >= 0` with `sum_x Tr(Y_x N_x) >= 1`
/// on the free set.
pub fn weight_measurement_dual(m: &Povm, free: &FreeMeasurementSet) -> Result<DualSolution> {
    measurement_dual(m, free, true)
}

fn state_dual(rho: &DensityMatrix, free: &FreeStateSet, weight: bool) -> Result<DualSolution> {
    let d = free.dim();
    check_state_dim(rho, d)?;
    let functionals = free.witness_functionals()?;
    let mut prog = ConicProgram::new(Sense::Maximize);
    let z = prog.add_block("Z", d);
    if weight {
        prog.set_objective(LinearExpr::new().block(z, rho.op().scale(-1.0)), 1.0);
    } else {
        prog.set_objective(LinearExpr::new().block(z, rho.op().clone()), -1.0);
    }
    for c in functionals {
        let e = LinearExpr::new().block(z, c);
        if weight {
            prog.add_ge(e, 1.0);
        } else {
            prog.add_le(e, 1.0);
        }
    }
    let rep = solve_optimal(&prog, &SolverOptions::default(), "state dual")?;
    Ok(DualSolution {
        value: rep.objective,
        witness: rep.block_values.clone(),
        solver: SolveSummary::from(&rep),
    })
}

fn measurement_dual(m: &Povm, free: &FreeMeasurementSet, weight: bool) -> Result<DualSolution> {
    check_povm_shape(m, free)?;
    let (d, k) = (m.dim(), m.outcomes());
    let functionals = free.witness_functionals()?;
    let mut prog = ConicProgram::new(Sense::Maximize);
    let z: Vec<BlockId> = (0..k).map(|x| prog.add_block(format!("Z{x}"), d)).collect();
    let mut obj = LinearExpr::new();
    for (x, &b) in z.iter().enumerate() {
        obj.push_block(b, if weight { m.element(x).scale(-1.0) } else { m.element(x).clone() });
    }
    prog.set_objective(obj, if weight { 1.0 } else { -1.0 });
    for f in functionals {
        let mut e = LinearExpr::new();
        for (x, c) in f {
            e.push_block(z[x], c);
        }
        if weight {
            prog.add_ge(e, 1.0);
        } else {
            prog.add_le(e, 1.0);
        }
    }
    let rep = solve_optimal(&prog, &SolverOptions::default(), "measurement dual")?;
    Ok(DualSolution {
        value: rep.objective,
        witness: rep.block_values.clone(),
        solver: SolveSummary::from(&rep),
    })
}

impl QuantifierResult {
    /// Largest violation of the free-set witness constraints by the witness
    /// (`Tr[Z s] <= 1` / `Tr[Y s] >= 1` on the extreme points).
    pub fn witness_violation_state(&self, free: &FreeStateSet) -> Result<f64> {
        let fs = free.witness_functionals()?;
        let w = &self.witness[0];
        Ok(fs
            .iter()
            .map(|c| {
                let v = c.pair(w);
                if self.quantity.is_weight() {
                    1.0 - v
                } else {
                    v - 1.0
                }
            })
            .fold(0.0, f64::max))
    }

    pub fn witness_violation_measurement(&self, free: &FreeMeasurementSet) -> Result<f64> {
        let fs = free.witness_functionals()?;
        Ok(fs
            .iter()
            .map(|f| {
                let v: f64 = f.iter().map(|(x, c)| c.pair(&self.witness[*x])).sum();
                if self.quantity.is_weight() {
                    1.0 - v
                } else {
                    v - 1.0
                }
            })
            .fold(0.0, f64::max))
    }
}
