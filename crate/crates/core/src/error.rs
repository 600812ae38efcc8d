//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by matrix construction, decomposition, sampling and IO.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a precondition (bad rank, bad budget, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Operand shapes do not conform.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix required to be nonsingular is (numerically) singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Adaptive sampling ran out of drawable columns.
    #[error("column sampling exhausted: {available} drawable, {requested} requested")]
    Exhausted { available: usize, requested: usize },

    /// The residual is already (numerically) zero: the selected columns span
    /// the matrix exactly, so there is nothing left to sample.
    #[error("residual is zero: selected columns already span the matrix")]
    ExactResidual,

    /// Malformed input data; carries a 1-based line number when known.
    #[error("data error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Data { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn data(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Data { line, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
