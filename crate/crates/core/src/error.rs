use thiserror::Error;

use crate::sdp::SolverStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("map is not trace-nonincreasing: {0}")]
    NotTraceNonincreasing(String),

    #[error("instrument completion infeasible: {0}")]
    CompletionInfeasible(String),

    #[error("degenerate witness: {0}")]
    DegenerateWitness(String),

    #[error("unsupported free set: {0}")]
    UnsupportedFreeSet(String),

    #[error("malformed conic program: {0}")]
    MalformedProgram(String),

    #[error("solver did not reach optimality ({status:?}): {detail}")]
    Solver { status: SolverStatus, detail: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("guard exceeded: {0}")]
    GuardExceeded(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
