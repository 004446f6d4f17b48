use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index out of range: {index} (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    /// Diagonal entry missing or not strictly positive (0-based index).
    #[error("diagonal entry {index} is {value}, matrix is not SPD")]
    NonPositiveDiagonal { index: usize, value: f64 },

    /// A dense Cholesky / LDLᵀ pivot or a CG curvature `pᵀAp` was not positive.
    #[error("matrix not SPD: {0}")]
    NotSpd(String),

    #[error("preconditioner not SPD: rᵀMr = {value} at iteration {iteration}")]
    PreconditionerNotSpd { iteration: usize, value: f64 },

    /// Nonpositive pivot δ while bordering column `column` (0-based).
    #[error("breakdown at column {column}: pivot delta = {delta}")]
    Breakdown { column: usize, delta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix market line {line}: {reason}")]
    MatrixMarket { line: usize, reason: String },

    #[error("file not found: {0}")]
    MissingFile(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
