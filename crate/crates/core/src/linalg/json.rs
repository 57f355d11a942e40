//! Matrix interchange format: `{"dim": d, "re": [[..]], "im": [[..]]}`, row
//! major. Composite objects are arrays of such matrices under a `"kind"` tag.

use serde::{Deserialize, Serialize};

use super::operator::HermitianOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_operator(op: &HermitianOperator, kind: Option<&str>) -> Self {
        let d = op.dim();
        let re = (0..d).map(|i| (0..d).map(|j| op.get(i, j).re).collect()).collect();
        let im = (0..d).map(|i| (0..d).map(|j| op.get(i, j).im).collect()).collect();
        MatrixJson {
            kind: kind.map(str::to_owned),
            dim: d,
            re,
            im,
        }
    }

    pub fn into_operator(self) -> Result<HermitianOperator> {
        if self.re.len() != self.dim || self.im.len() != self.dim {
            return Err(Error::invalid(format!(
                "matrix declares dim {} but has {} re rows / {} im rows",
                self.dim,
                self.re.len(),
                self.im.len()
            )));
        }
        if let Some((i, _)) = self
            .re
            .iter()
            .chain(&self.im)
            .enumerate()
            .find(|(_, r)| r.len() != self.dim)
        {
            return Err(Error::invalid(format!(
                "matrix row {} has wrong length (dim {})",
                i % self.dim.max(1),
                self.dim
            )));
        }
        HermitianOperator::from_parts(&self.re, &self.im)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmJson {
    pub kind: String,
    pub elements: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstrumentJson {
    pub kind: String,
    pub d_in: usize,
    pub d_out: usize,
    pub subchannels: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleJson {
    pub kind: String,
    pub d_in: usize,
    pub d_out: usize,
    pub channels: Vec<MatrixJson>,
    pub prior: Vec<f64>,
}

pub(crate) fn expect_kind(found: Option<&str>, allowed: &[&str], what: &str) -> Result<()> {
    match found {
        None => Ok(()),
        Some(k) if allowed.contains(&k) => Ok(()),
        Some(k) => Err(Error::invalid(format!(
            "{what}: unexpected kind tag {k:?} (expected one of {allowed:?})"
        ))),
    }
}
