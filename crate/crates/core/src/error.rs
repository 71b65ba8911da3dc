use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("configuration violates bounds: {}", .0.join("; "))]
    InvalidConfiguration(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unit coordinate {index} = {value} lies outside [0, 1]")]
    OutsideUnitCube { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Cholesky factorization failed after jitter escalation to {jitter:e}")]
    Cholesky { jitter: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget {budget} is smaller than the initial design size {initial}")]
    BudgetTooSmall { budget: usize, initial: usize },

    #[error("objective evaluation failed at {configuration:?}: {source}")]
    Evaluation {
        configuration: Vec<f64>,
        #[source]
        source: EvalError,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed trace file {path}: {reason}")]
    Trace { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

/// Failures of a single objective evaluation.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluator timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("malformed evaluator response: {line:?} ({reason})")]
    Malformed { line: String, reason: String },

    #[error("evaluator returned a non-finite value: {0}")]
    NonFinite(f64),

    #[error("evaluator process error: {0}")]
    Process(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
