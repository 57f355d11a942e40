use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::HermitianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScalarId(pub(crate) usize);

impl BlockId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ScalarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Real-linear functional `sum_b Re Tr(C_b X_b) + sum_f c_f t_f` over Hermitian
/// blocks and free scalars.
#[derive(Debug, Clone, Default)]
pub struct LinearExpr {
    pub(crate) blocks: Vec<(BlockId, HermitianOperator)>,
    pub(crate) scalars: Vec<(ScalarId, f64)>,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, id: BlockId, coeff: HermitianOperator) -> Self {
        self.blocks.push((id, coeff));
        self
    }

    pub fn scalar(mut self, id: ScalarId, coeff: f64) -> Self {
        self.scalars.push((id, coeff));
        self
    }

    pub fn push_block(&mut self, id: BlockId, coeff: HermitianOperator) {
        self.blocks.push((id, coeff));
    }

    pub fn push_scalar(&mut self, id: ScalarId, coeff: f64) {
        self.scalars.push((id, coeff));
    }

    fn negated(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|(b, c)| (*b, -c)).collect(),
            scalars: self.scalars.iter().map(|(s, c)| (*s, -c)).collect(),
        }
    }

    /// Evaluates the functional at given block and scalar values.
    pub fn evaluate(&self, blocks: &[HermitianOperator], scalars: &[f64]) -> f64 {
        self.blocks.iter().map(|(b, c)| c.pair(&blocks[b.0])).sum::<f64>()
            + self.scalars.iter().map(|(s, c)| c * scalars[s.0]).sum::<f64>()
    }
}

/// A small dense semidefinite program over Hermitian PSD blocks and free real
/// scalars, with linear equalities and `<=` inequalities.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub(crate) blocks: Vec<(String, usize)>,
    pub(crate) scalars: Vec<String>,
    pub(crate) sense: Sense,
    pub(crate) objective: LinearExpr,
    pub(crate) objective_constant: f64,
    pub(crate) eqs: Vec<(LinearExpr, f64)>,
    pub(crate) ineqs: Vec<(LinearExpr, f64)>,
}

impl ConicProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            blocks: Vec::new(),
            scalars: Vec::new(),
            sense,
            objective: LinearExpr::new(),
            objective_constant: 0.0,
            eqs: Vec::new(),
            ineqs: Vec::new(),
        }
    }

    pub fn add_block(&mut self, name: impl Into<String>, dim: usize) -> BlockId {
        self.blocks.push((name.into(), dim));
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarId {
        self.scalars.push(name.into());
        ScalarId(self.scalars.len() - 1)
    }

    pub fn set_objective(&mut self, expr: LinearExpr, constant: f64) {
        self.objective = expr;
        self.objective_constant = constant;
    }

    pub fn add_eq(&mut self, expr: LinearExpr, rhs: f64) {
        self.eqs.push((expr, rhs));
    }

    /// `expr <= rhs`.
    pub fn add_le(&mut self, expr: LinearExpr, rhs: f64) {
        self.ineqs.push((expr, rhs));
    }

    /// `expr >= rhs`, stored as `-expr <= -rhs`.
    pub fn add_ge(&mut self, expr: LinearExpr, rhs: f64) {
        self.ineqs.push((expr.negated(), -rhs));
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.1).collect()
    }

    pub fn block_name(&self, id: BlockId) -> &str {
        &self.blocks[id.0].0
    }

    pub fn num_scalars(&self) -> usize {
        self.scalars.len()
    }

    pub fn num_eqs(&self) -> usize {
        self.eqs.len()
    }

    pub fn num_ineqs(&self) -> usize {
        self.ineqs.len()
    }

    /// Multiplies the objective (and its constant) by `c`.
    pub fn scale_objective(&mut self, c: f64) {
        for (_, coeff) in &mut self.objective.blocks {
            *coeff = coeff.scale(c);
        }
        for (_, coeff) in &mut self.objective.scalars {
            *coeff *= c;
        }
        self.objective_constant *= c;
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() && self.scalars.is_empty() {
            return Err(Error::MalformedProgram("program has no variables".into()));
        }
        if let Some((name, _)) = self.blocks.iter().find(|(_, d)| *d == 0) {
            return Err(Error::MalformedProgram(format!("block {name} has dimension 0")));
        }
        let check = |what: &str, e: &LinearExpr| -> Result<()> {
            for (b, c) in &e.blocks {
                let Some((name, dim)) = self.blocks.get(b.0) else {
                    return Err(Error::MalformedProgram(format!("{what} references undeclared block #{}", b.0)));
                };
                if c.dim() != *dim {
                    return Err(Error::MalformedProgram(format!(
                        "{what}: coefficient on block {name} has dim {} (block dim {dim})",
                        c.dim()
                    )));
                }
            }
            for (s, c) in &e.scalars {
                if s.0 >= self.scalars.len() {
                    return Err(Error::MalformedProgram(format!("{what} references undeclared scalar #{}", s.0)));
                }
                if !c.is_finite() {
                    return Err(Error::MalformedProgram(format!("{what} has a non-finite coefficient")));
                }
            }
            Ok(())
        };
        check("objective", &self.objective)?;
        for (i, (e, rhs)) in self.eqs.iter().enumerate() {
            check(&format!("equality {i}"), e)?;
            if !rhs.is_finite() {
                return Err(Error::MalformedProgram(format!("equality {i} has non-finite rhs")));
            }
        }
        for (i, (e, rhs)) in self.ineqs.iter().enumerate() {
            check(&format!("inequality {i}"), e)?;
            if !rhs.is_finite() {
                return Err(Error::MalformedProgram(format!("inequality {i} has non-finite rhs")));
            }
        }
        Ok(())
    }
}
