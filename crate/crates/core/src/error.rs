use thiserror::Error;

use crate::framework::PhaseTrace;

/// Errors raised by the optimization and privacy routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The solver ran out of gradient evaluations before certifying its target.
    #[error("gradient budget exhausted after {used} evaluations (limit {limit}, planned {planned})")]
    BudgetExceeded {
        used: u64,
        limit: u64,
        planned: u64,
        best_x: Vec<f64>,
        best_y: Option<Vec<f64>>,
    },

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("ledger violation: {0}")]
    LedgerViolation(String),

    /// The problem does not satisfy the preconditions of the requested algorithm.
    #[error("routing error: {0}")]
    Routing(String),

    #[error("phase {phase} failed: {source}")]
    PhaseFailed {
        phase: usize,
        completed: Vec<PhaseTrace>,
        #[source]
        source: Box<Error>,
    },

    #[error("config error (line {line}, field `{field}`): {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
