//! Convex free sets of states and measurements.
//!
//! Each set supports three things: a membership test (Frobenius distance to
//! the free affine manifold), the homogeneous linear constraints describing
//! the cone it generates, and a finite list of linear functionals equivalent
//! to the universally quantified witness conditions `Tr[Z s] <= 1` for all free
//! `s` (built-in kinds only).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, HermitianOperator, Povm};
use crate::sdp::{self, BlockId, ConicProgram, LinearExpr, ScalarId, Sense, SolverOptions};

/// Membership tolerance shared by all free sets.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Largest `d` and `k` for which the `k^d` extreme incoherent POVMs are
/// enumerated.
pub const INCOHERENT_POVM_MAX: usize = 4;

/// One affine equality `sum_x Re Tr(A_x N_x) = rhs`. For state sets `coeffs`
/// has a single entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub coeffs: Vec<HermitianOperator>,
    pub rhs: f64,
}

/// JSON descriptor `{"kind": ..., "dim": d, "outcomes": k?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FreeSetDescriptor {
    Incoherent {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outcomes: Option<usize>,
    },
    Trivial {
        dim: usize,
        outcomes: usize,
    },
    IncoherentPovm {
        dim: usize,
        outcomes: usize,
    },
    CustomAffine {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outcomes: Option<usize>,
        constraints: Vec<AffineConstraint>,
    },
}

impl FreeSetDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn state_set(&self) -> Result<FreeStateSet> {
        match self {
            FreeSetDescriptor::Incoherent { dim, .. } => FreeStateSet::incoherent(*dim),
            FreeSetDescriptor::CustomAffine {
                dim,
                outcomes: None,
                constraints,
            } => FreeStateSet::custom_affine(*dim, constraints.clone()),
            other => Err(Error::UnsupportedFreeSet(format!(
                "descriptor {} does not describe a set of states",
                other.kind_name()
            ))),
        }
    }

    /// `incoherent` with `outcomes` is read as `incoherent-povm`.
    pub fn measurement_set(&self) -> Result<FreeMeasurementSet> {
        match self {
            FreeSetDescriptor::Trivial { dim, outcomes } => FreeMeasurementSet::trivial(*dim, *outcomes),
            FreeSetDescriptor::IncoherentPovm { dim, outcomes }
            | FreeSetDescriptor::Incoherent {
                dim,
                outcomes: Some(outcomes),
            } => FreeMeasurementSet::incoherent(*dim, *outcomes),
            FreeSetDescriptor::CustomAffine {
                dim,
                outcomes: Some(k),
                constraints,
            } => FreeMeasurementSet::custom_affine(*dim, *k, constraints.clone()),
            other => Err(Error::UnsupportedFreeSet(format!(
                "descriptor {} (without outcomes) does not describe a set of measurements",
                other.kind_name()
            ))),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            FreeSetDescriptor::Incoherent { .. } => "incoherent",
            FreeSetDescriptor::Trivial { .. } => "trivial",
            FreeSetDescriptor::IncoherentPovm { .. } => "incoherent-povm",
            FreeSetDescriptor::CustomAffine { .. } => "custom-affine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub is_member: bool,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum StateKind {
    Incoherent,
    CustomAffine(Vec<AffineConstraint>),
}

/// Closed convex set of free states.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeStateSet {
    kind: StateKind,
    dim: usize,
}

impl FreeStateSet {
    /// Diagonal states in the computational basis.
    pub fn incoherent(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("free state set needs dimension >= 2"));
        }
        Ok(Self {
            kind: StateKind::Incoherent,
            dim,
        })
    }

    /// Density matrices with `Re Tr(A_k s) = c_k`. Rejected when empty.
    pub fn custom_affine(dim: usize, constraints: Vec<AffineConstraint>) -> Result<Self> {
        if dim < 1 {
            return Err(Error::invalid("free state set needs positive dimension"));
        }
        for (k, c) in constraints.iter().enumerate() {
            if c.coeffs.len() != 1 || c.coeffs[0].dim() != dim {
                return Err(Error::invalid(format!(
                    "custom state constraint {k} must hold exactly one {dim}x{dim} coefficient"
                )));
            }
        }
        let set = Self {
            kind: StateKind::CustomAffine(constraints),
            dim,
        };
        set.maximise_linear(&HermitianOperator::zeros(dim))
            .map_err(|_| Error::invalid("custom free state set is empty"))?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self.kind, StateKind::Incoherent)
    }

    pub fn descriptor(&self) -> FreeSetDescriptor {
        match &self.kind {
            StateKind::Incoherent => FreeSetDescriptor::Incoherent {
                dim: self.dim,
                outcomes: None,
            },
            StateKind::CustomAffine(c) => FreeSetDescriptor::CustomAffine {
                dim: self.dim,
                outcomes: None,
                constraints: c.clone(),
            },
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimensionMismatch {
                context: "free state set",
                expected: self.dim,
                got: d,
            });
        }
        Ok(())
    }

    /// Frobenius distance from `op` to the free affine manifold.
    pub fn distance(&self, op: &HermitianOperator) -> Result<f64> {
        self.check_dim(op.dim())?;
        Ok(match &self.kind {
            StateKind::Incoherent => op.off_diagonal_norm(),
            StateKind::CustomAffine(cs) => affine_distance(cs, std::slice::from_ref(op)),
        })
    }

    pub fn membership(&self, rho: &DensityMatrix, tol: f64) -> Result<Membership> {
        let distance = self.distance(rho.op())?;
        Ok(Membership {
            is_member: distance <= tol,
            distance,
        })
    }

    /// Adds the homogeneous constraints `T in cone(F)` on a PSD block `T`.
    pub fn add_cone_constraints(&self, prog: &mut ConicProgram, t: BlockId) {
        let d = self.dim;
        match &self.kind {
            StateKind::Incoherent => {
                for i in 0..d {
                    for j in i + 1..d {
                        prog.add_eq(
                            LinearExpr::new().block(t, HermitianOperator::re_entry_functional(d, i, j)),
                            0.0,
                        );
                        prog.add_eq(
                            LinearExpr::new().block(t, HermitianOperator::im_entry_functional(d, i, j)),
                            0.0,
                        );
                    }
                }
            }
            StateKind::CustomAffine(cs) => {
                for c in cs {
                    let coeff = &c.coeffs[0] - &HermitianOperator::identity(d).scale(c.rhs);
                    prog.add_eq(LinearExpr::new().block(t, coeff), 0.0);
                }
            }
        }
    }

    /// Coefficients `C_j` such that `Tr[Z s] <= 1` for all free `s` iff
    /// `Re Tr(C_j Z) <= 1` for every `j` (the extreme points of the set).
    pub fn witness_functionals(&self) -> Result<Vec<HermitianOperator>> {
        match &self.kind {
            StateKind::Incoherent => Ok((0..self.dim)
                .map(|i| HermitianOperator::basis_projector(self.dim, i))
                .collect()),
            StateKind::CustomAffine(_) => Err(Error::UnsupportedFreeSet(
                "custom-affine state sets carry no extreme-point description".into(),
            )),
        }
    }

    /// `max_{s in F} Re Tr(D s)` with a maximiser. Ties pick the lowest index.
    pub fn maximise_linear(&self, d_op: &HermitianOperator) -> Result<(f64, DensityMatrix)> {
        self.check_dim(d_op.dim())?;
        match &self.kind {
            StateKind::Incoherent => {
                let diag = d_op.diagonal();
                let best = argmax(&diag);
                Ok((diag[best], DensityMatrix::basis(self.dim, best)))
            }
            StateKind::CustomAffine(cs) => {
                let d = self.dim;
                let mut prog = ConicProgram::new(Sense::Maximize);
                let s = prog.add_block("sigma", d);
                prog.set_objective(LinearExpr::new().block(s, d_op.clone()), 0.0);
                prog.add_eq(LinearExpr::new().block(s, HermitianOperator::identity(d)), 1.0);
                for c in cs {
                    prog.add_eq(LinearExpr::new().block(s, c.coeffs[0].clone()), c.rhs);
                }
                let r = sdp::solve(&prog, &SolverOptions::default())?.require_optimal("free-state optimisation")?;
                let state = DensityMatrix::normalised(&r.block_values[0])?;
                Ok((r.objective, state))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MeasurementKind {
    Trivial,
    Incoherent,
    CustomAffine(Vec<AffineConstraint>),
}

/// Closed convex set of free `k`-outcome measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeMeasurementSet {
    kind: MeasurementKind,
    dim: usize,
    outcomes: usize,
}

impl FreeMeasurementSet {
    /// POVMs `{q_x I}`.
    pub fn trivial(dim: usize, outcomes: usize) -> Result<Self> {
        Self::check_shape(dim, outcomes)?;
        Ok(Self {
            kind: MeasurementKind::Trivial,
            dim,
            outcomes,
        })
    }

    /// POVMs with all elements diagonal in the computational basis.
    pub fn incoherent(dim: usize, outcomes: usize) -> Result<Self> {
        Self::check_shape(dim, outcomes)?;
        Ok(Self {
            kind: MeasurementKind::Incoherent,
            dim,
            outcomes,
        })
    }

    /// POVMs with `sum_x Re Tr(A_{k,x} N_x) = c_k`. Rejected when empty.
    pub fn custom_affine(dim: usize, outcomes: usize, constraints: Vec<AffineConstraint>) -> Result<Self> {
        Self::check_shape(dim, outcomes)?;
        for (k, c) in constraints.iter().enumerate() {
            if c.coeffs.len() != outcomes || c.coeffs.iter().any(|a| a.dim() != dim) {
                return Err(Error::invalid(format!(
                    "custom measurement constraint {k} must hold {outcomes} coefficients of dimension {dim}"
                )));
            }
        }
        let set = Self {
            kind: MeasurementKind::CustomAffine(constraints),
            dim,
            outcomes,
        };
        set.maximise_linear(&vec![HermitianOperator::zeros(dim); outcomes])
            .map_err(|_| Error::invalid("custom free measurement set is empty"))?;
        Ok(set)
    }

    fn check_shape(dim: usize, outcomes: usize) -> Result<()> {
        if dim < 1 {
            return Err(Error::invalid("free measurement set needs positive dimension"));
        }
        if outcomes < 2 {
            return Err(Error::invalid("free measurement set needs at least 2 outcomes"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, MeasurementKind::CustomAffine(_))
    }

    /// Same kind of set with a different number of outcomes (custom sets
    /// cannot be resized).
    pub fn with_outcomes(&self, outcomes: usize) -> Result<Self> {
        match self.kind {
            MeasurementKind::Trivial => Self::trivial(self.dim, outcomes),
            MeasurementKind::Incoherent => Self::incoherent(self.dim, outcomes),
            MeasurementKind::CustomAffine(_) if outcomes == self.outcomes => Ok(self.clone()),
            MeasurementKind::CustomAffine(_) => Err(Error::UnsupportedFreeSet(
                "custom-affine measurement sets have a fixed outcome count".into(),
            )),
        }
    }

    pub fn descriptor(&self) -> FreeSetDescriptor {
        match &self.kind {
            MeasurementKind::Trivial => FreeSetDescriptor::Trivial {
                dim: self.dim,
                outcomes: self.outcomes,
            },
            MeasurementKind::Incoherent => FreeSetDescriptor::IncoherentPovm {
                dim: self.dim,
                outcomes: self.outcomes,
            },
            MeasurementKind::CustomAffine(c) => FreeSetDescriptor::CustomAffine {
                dim: self.dim,
                outcomes: Some(self.outcomes),
                constraints: c.clone(),
            },
        }
    }

    fn check_shape_of(&self, d: usize, k: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimensionMismatch {
                context: "free measurement set dimension",
                expected: self.dim,
                got: d,
            });
        }
        if k != self.outcomes {
            return Err(Error::DimensionMismatch {
                context: "free measurement set outcomes",
                expected: self.outcomes,
                got: k,
            });
        }
        Ok(())
    }

    /// Frobenius distance of the element tuple from the free affine manifold.
    pub fn distance(&self, elements: &[HermitianOperator]) -> Result<f64> {
        let d = elements.first().map(|e| e.dim()).unwrap_or(0);
        self.check_shape_of(d, elements.len())?;
        Ok(match &self.kind {
            MeasurementKind::Trivial => elements
                .iter()
                .map(|m| {
                    let proj = HermitianOperator::identity(d).scale(m.trace() / d as f64);
                    (m - &proj).frobenius_norm().powi(2)
                })
                .sum::<f64>()
                .sqrt(),
            MeasurementKind::Incoherent => elements
                .iter()
                .map(|m| m.off_diagonal_norm().powi(2))
                .sum::<f64>()
                .sqrt(),
            MeasurementKind::CustomAffine(cs) => affine_distance(cs, elements),
        })
    }

    pub fn membership(&self, m: &Povm, tol: f64) -> Result<Membership> {
        let distance = self.distance(m.elements())?;
        Ok(Membership {
            is_member: distance <= tol,
            distance,
        })
    }

    /// Adds constraints placing the blocks `N_x` in the cone generated by the
    /// set, where `sum_x N_x = t I` is imposed by the caller.
    pub fn add_cone_constraints(&self, prog: &mut ConicProgram, blocks: &[BlockId], t: ScalarId) {
        let d = self.dim;
        match &self.kind {
            MeasurementKind::Trivial | MeasurementKind::Incoherent => {
                for &b in blocks {
                    for i in 0..d {
                        for j in i + 1..d {
                            prog.add_eq(
                                LinearExpr::new().block(b, HermitianOperator::re_entry_functional(d, i, j)),
                                0.0,
                            );
                            prog.add_eq(
                                LinearExpr::new().block(b, HermitianOperator::im_entry_functional(d, i, j)),
                                0.0,
                            );
                        }
                    }
                    if self.kind == MeasurementKind::Trivial {
                        for i in 1..d {
                            let mut diag = vec![0.0; d];
                            diag[0] = 1.0;
                            diag[i] = -1.0;
                            prog.add_eq(LinearExpr::new().block(b, HermitianOperator::diag(&diag)), 0.0);
                        }
                    }
                }
            }
            MeasurementKind::CustomAffine(cs) => {
                for c in cs {
                    let mut e = LinearExpr::new().scalar(t, -c.rhs);
                    for (&b, a) in blocks.iter().zip(&c.coeffs) {
                        e.push_block(b, a.clone());
                    }
                    prog.add_eq(e, 0.0);
                }
            }
        }
    }

    /// Functionals `{C_{j,x}}` such that `sum_x Tr[Z_x N_x] <= 1` for all free
    /// `N` iff `sum_x Re Tr(C_{j,x} Z_x) <= 1` for every `j`. Entries are
    /// `(x, C_{j,x})` with zero coefficients omitted.
    pub fn witness_functionals(&self) -> Result<Vec<Vec<(usize, HermitianOperator)>>> {
        let (d, k) = (self.dim, self.outcomes);
        match &self.kind {
            MeasurementKind::Trivial => Ok((0..k).map(|x| vec![(x, HermitianOperator::identity(d))]).collect()),
            MeasurementKind::Incoherent => {
                if d > INCOHERENT_POVM_MAX || k > INCOHERENT_POVM_MAX {
                    return Err(Error::GuardExceeded(format!(
                        "incoherent POVM witness enumeration needs d <= {INCOHERENT_POVM_MAX} and k <= {INCOHERENT_POVM_MAX} (got d={d}, k={k})"
                    )));
                }
                Ok(deterministic_assignments(d, k)
                    .into_iter()
                    .map(|f| {
                        (0..k)
                            .filter_map(|x| {
                                let diag: Vec<f64> = f.iter().map(|&fx| if fx == x { 1.0 } else { 0.0 }).collect();
                                diag.iter().any(|&v| v > 0.0).then(|| (x, HermitianOperator::diag(&diag)))
                            })
                            .collect()
                    })
                    .collect())
            }
            MeasurementKind::CustomAffine(_) => Err(Error::UnsupportedFreeSet(
                "custom-affine measurement sets carry no extreme-point description".into(),
            )),
        }
    }

    /// `max_{N in F} sum_x Re Tr(D_x N_x)` with a maximiser. Ties pick the
    /// lowest outcome index.
    pub fn maximise_linear(&self, ds: &[HermitianOperator]) -> Result<(f64, Povm)> {
        let d = ds.first().map(|e| e.dim()).unwrap_or(0);
        self.check_shape_of(d, ds.len())?;
        let k = self.outcomes;
        match &self.kind {
            MeasurementKind::Trivial => {
                let traces: Vec<f64> = ds.iter().map(|x| x.trace()).collect();
                let best = argmax(&traces);
                let mut q = vec![0.0; k];
                q[best] = 1.0;
                Ok((traces[best], Povm::trivial(d, &q)?))
            }
            MeasurementKind::Incoherent => {
                let mut diags = vec![vec![0.0; d]; k];
                let mut value = 0.0;
                for i in 0..d {
                    let col: Vec<f64> = ds.iter().map(|x| x.get(i, i).re).collect();
                    let best = argmax(&col);
                    value += col[best];
                    diags[best][i] = 1.0;
                }
                Ok((value, Povm::new(diags.iter().map(|v| HermitianOperator::diag(v)).collect())?))
            }
            MeasurementKind::CustomAffine(cs) => {
                let mut prog = ConicProgram::new(Sense::Maximize);
                let blocks: Vec<BlockId> = (0..k).map(|x| prog.add_block(format!("N{x}"), d)).collect();
                let mut obj = LinearExpr::new();
                for (&b, dx) in blocks.iter().zip(ds) {
                    obj.push_block(b, dx.clone());
                }
                prog.set_objective(obj, 0.0);
                for basis in HermitianOperator::hermitian_basis(d) {
                    let mut e = LinearExpr::new();
                    for &b in &blocks {
                        e.push_block(b, basis.clone());
                    }
                    prog.add_eq(e, basis.trace());
                }
                for c in cs {
                    let mut e = LinearExpr::new();
                    for (&b, a) in blocks.iter().zip(&c.coeffs) {
                        e.push_block(b, a.clone());
                    }
                    prog.add_eq(e, c.rhs);
                }
                let r = sdp::solve(&prog, &SolverOptions::default())?
                    .require_optimal("free-measurement optimisation")?;
                Ok((r.objective, Povm::renormalised(r.block_values.clone())?))
            }
        }
    }
}

/// All maps `{0..d} -> {0..k}` as vectors `f[i]`.
pub(crate) fn deterministic_assignments(d: usize, k: usize) -> Vec<Vec<usize>> {
    let total = k.pow(d as u32);
    (0..total)
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let v = code % k;
                    code /= k;
                    v
                })
                .collect()
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Frobenius distance from the tuple `xs` to `{Y : sum_x Re Tr(A_{k,x} Y_x) = c_k}`.
fn affine_distance(cs: &[AffineConstraint], xs: &[HermitianOperator]) -> f64 {
    if cs.is_empty() {
        return 0.0;
    }
    let m = cs.len();
    let pair = |a: &AffineConstraint, b: &AffineConstraint| -> f64 { a.coeffs.iter().zip(&b.coeffs).map(|(p, q)| p.pair(q)).sum() };
    let gram = DMatrix::from_fn(m, m, |i, j| pair(&cs[i], &cs[j]));
    let r = DVector::from_fn(m, |i, _| {
        cs[i].coeffs.iter().zip(xs).map(|(a, x)| a.pair(x)).sum::<f64>() - cs[i].rhs
    });
    let pinv = gram
        .pseudo_inverse(1e-12)
        .unwrap_or_else(|_| DMatrix::zeros(m, m));
    r.dot(&(pinv * &r)).max(0.0).sqrt()
}
