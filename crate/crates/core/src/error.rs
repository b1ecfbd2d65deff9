use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum SpcaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is numerically zero; no components to extract")]
    ZeroMatrix,

    #[error("infeasible sparsity: s*k = {s}*{k} exceeds dimension {d}")]
    InfeasibleSparsity { s: usize, k: usize, d: usize },

    #[error("capacity exceeded: {what} requires {count} (limit {limit})")]
    CapacityExceeded {
        what: &'static str,
        count: u128,
        limit: u128,
    },

    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),

    #[error("parse error at line {line}{}: {msg}", col.map(|c| format!(", column {c}")).unwrap_or_default())]
    ParseError {
        line: usize,
        col: Option<usize>,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SpcaError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SpcaError::InvalidInput(msg.into()))
}
