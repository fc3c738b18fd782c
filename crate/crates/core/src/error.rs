use thiserror::Error;

use crate::lp::LpError;

/// Errors raised by the mechanisms, metrics and IO helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("row {row}, column {column}: value {value} lies outside [0, 1]")]
    OutOfDomain { row: usize, column: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("partition depth {0} exceeds the maximum of 62")]
    DepthTooLarge(u32),

    #[error("grid of {cells} cells exceeds the limit of {limit}")]
    GridTooLarge { cells: u128, limit: u64 },

    #[error("consistent root count is zero, no synthetic points to emit")]
    EmptySynthetic,

    #[error("not a probability measure: total mass {0}")]
    NotProbability(f64),

    #[error("measures are supported on different point sets")]
    SupportMismatch,

    #[error("support of {size} points exceeds the limit of {limit}")]
    SupportTooLarge { size: usize, limit: usize },

    #[error("audit window {window} leaves tail mass {tail:e} > 1e-6; use a window of at least {required}")]
    WindowTooSmall { window: i64, required: i64, tail: f64 },

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("{failures} of {trials} trials at n = {n} produced no synthetic points (limit 20%)")]
    TooManyFailures { n: usize, failures: usize, trials: usize },

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
