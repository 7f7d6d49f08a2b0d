use thiserror::Error;

use crate::oracle::ElementId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("element {element} is outside the ground set of size {n}")]
    OutOfGround { element: ElementId, n: usize },

    #[error("batch must contain at least one query")]
    EmptyBatch,

    #[error("value-query budget of {budget} exhausted ({used} used, batch needs {requested})")]
    BudgetExhausted { budget: u64, used: u64, requested: u64 },

    /// |X_j| grew with j during the threshold binary search; only possible
    /// when the objective is not submodular (or numerically degenerate).
    #[error("candidate set sizes not monotone: |X_{lo}| = {lo_size} < |X_{hi}| = {hi_size}")]
    NonMonotoneCandidates {
        lo: usize,
        lo_size: usize,
        hi: usize,
        hi_size: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("pool of {size} elements exceeds the exhaustive-search limit of {limit}")]
    PoolTooLarge { size: usize, limit: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
