use serde::{Deserialize, Serialize};

use super::json::{expect_kind, MatrixJson, PovmJson};
use super::operator::HermitianOperator;
use super::PSD_TOL;
use crate::error::{Error, Result};

/// Unit-trace positive semidefinite operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    /// Validates PSD-ness and unit trace (both within `1e-9`); eigenvalues in
    /// `[-1e-9, 0)` are clipped and the result renormalised.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let min = op.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::invalid(format!(
                "density matrix is not PSD (min eigenvalue {min:.3e})"
            )));
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > PSD_TOL {
            return Err(Error::invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let op = if min < 0.0 {
            let clipped = op.clip_negative();
            let t = clipped.trace();
            clipped.scale(1.0 / t)
        } else {
            op
        };
        Ok(Self { op })
    }

    /// Normalises a nonzero PSD operator (after clipping tiny negative
    /// eigenvalues) into a state.
    pub fn normalised(op: &HermitianOperator) -> Result<Self> {
        let clipped = op.clip_negative();
        let t = clipped.trace();
        if t <= 1e-300 {
            return Err(Error::invalid("cannot normalise a zero operator"));
        }
        Self::new(clipped.scale(1.0 / t))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            op: HermitianOperator::identity(d).scale(1.0 / d as f64),
        }
    }

    pub fn pure(psi: &[num_complex::Complex64]) -> Result<Self> {
        Self::normalised(&HermitianOperator::projector(psi))
    }

    /// `|i><i|`.
    pub fn basis(d: usize, i: usize) -> Self {
        Self {
            op: HermitianOperator::basis_projector(d, i),
        }
    }

    /// `|+><+|` on a qubit.
    pub fn plus() -> Self {
        Self {
            op: HermitianOperator::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).expect("valid"),
        }
    }

    /// Uniform superposition `|psi> = sum_i |i> / sqrt(d)`.
    pub fn maximally_coherent(d: usize) -> Self {
        let v = 1.0 / d as f64;
        let rows: Vec<Vec<f64>> = (0..d).map(|_| vec![v; d]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        Self {
            op: HermitianOperator::from_real_rows(&refs).expect("valid"),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    /// Convex combination `w self + (1-w) other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "state mixture",
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Self::new(&self.op.scale(w) + &other.op.scale(1.0 - w))
    }
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        expect_kind(j.kind.as_deref(), &["state"], "state")?;
        DensityMatrix::new(j.into_operator()?)
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(s: DensityMatrix) -> Self {
        MatrixJson::from_operator(&s.op, Some("state"))
    }
}

/// Finite POVM `{M_a}`: at least two PSD elements of equal dimension summing
/// to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmJson", into = "PovmJson")]
pub struct Povm {
    elements: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        if elements.len() < 2 {
            return Err(Error::invalid(format!(
                "a POVM needs at least 2 elements, got {}",
                elements.len()
            )));
        }
        let d = elements[0].dim();
        for e in &elements {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: "POVM element",
                    expected: d,
                    got: e.dim(),
                });
            }
        }
        let mut out = Vec::with_capacity(elements.len());
        for (a, e) in elements.into_iter().enumerate() {
            let min = e.min_eigenvalue();
            if min < -PSD_TOL {
                return Err(Error::invalid(format!(
                    "POVM element {a} is not PSD (min eigenvalue {min:.3e})"
                )));
            }
            out.push(if min < 0.0 { e.clip_negative() } else { e });
        }
        let total = HermitianOperator::sum(d, &out);
        let dev = total.max_abs_diff(&HermitianOperator::identity(d));
        if dev > PSD_TOL {
            return Err(Error::invalid(format!(
                "POVM elements do not sum to identity (max deviation {dev:.3e})"
            )));
        }
        Ok(Self { elements: out })
    }

    /// Clips negative eigenvalues and applies `S^{-1/2} N_a S^{-1/2}` with
    /// `S = sum_a N_a`, turning a nearly-normalised family (e.g. solver output)
    /// into a valid POVM.
    pub fn renormalised(elements: Vec<HermitianOperator>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid("empty POVM"));
        }
        let d = elements[0].dim();
        let clipped: Vec<HermitianOperator> = elements.iter().map(|e| e.clip_negative()).collect();
        let total = HermitianOperator::sum(d, &clipped);
        if total.min_eigenvalue() <= 1e-12 {
            return Err(Error::invalid("POVM elements do not span the identity"));
        }
        let s = total.inv_sqrt_psd(0.0);
        Self::new(clipped.iter().map(|e| e.sandwich(&s)).collect())
    }

    /// Trivial POVM `{q_a I}`.
    pub fn trivial(d: usize, q: &[f64]) -> Result<Self> {
        Self::new(q.iter().map(|&qa| HermitianOperator::identity(d).scale(qa)).collect())
    }

    /// Projective measurement in the computational basis.
    pub fn computational(d: usize) -> Self {
        Self {
            elements: (0..d).map(|i| HermitianOperator::basis_projector(d, i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn element(&self, a: usize) -> &HermitianOperator {
        &self.elements[a]
    }

    /// Classical post-processing `N_x = sum_a p(x|a) M_a`; `stochastic[a][x]`
    /// holds `p(x|a)`.
    pub fn post_process(&self, stochastic: &[Vec<f64>]) -> Result<Self> {
        if stochastic.len() != self.outcomes() {
            return Err(Error::DimensionMismatch {
                context: "post-processing rows",
                expected: self.outcomes(),
                got: stochastic.len(),
            });
        }
        let k = stochastic[0].len();
        for (a, row) in stochastic.iter().enumerate() {
            if row.len() != k || row.iter().any(|&p| p < -1e-12) {
                return Err(Error::invalid(format!("row {a} of post-processing is invalid")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("row {a} of post-processing sums to {s}")));
            }
        }
        let d = self.dim();
        let out = (0..k)
            .map(|x| {
                let mut acc = HermitianOperator::zeros(d);
                for (a, m) in self.elements.iter().enumerate() {
                    acc = &acc + &m.scale(stochastic[a][x]);
                }
                acc
            })
            .collect();
        Self::new(out)
    }

    /// Convex combination `w self + (1-w) other` (same outcome count).
    pub fn mix(&self, other: &Povm, w: f64) -> Result<Self> {
        if self.outcomes() != other.outcomes() || self.dim() != other.dim() {
            return Err(Error::invalid("mixed POVMs must share dimension and outcomes"));
        }
        Self::new(
            self.elements
                .iter()
                .zip(&other.elements)
                .map(|(a, b)| &a.scale(w) + &b.scale(1.0 - w))
                .collect(),
        )
    }
}

impl TryFrom<PovmJson> for Povm {
    type Error = Error;
    fn try_from(j: PovmJson) -> Result<Self> {
        expect_kind(Some(&j.kind), &["povm"], "povm")?;
        let elements = j
            .elements
            .into_iter()
            .enumerate()
            .map(|(a, m)| {
                m.into_operator()
                    .map_err(|e| Error::invalid(format!("elements[{a}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(elements)
    }
}

impl From<Povm> for PovmJson {
    fn from(p: Povm) -> Self {
        PovmJson {
            kind: "povm".into(),
            elements: p
                .elements
                .iter()
                .map(|e| MatrixJson::from_operator(e, None))
                .collect(),
        }
    }
}
