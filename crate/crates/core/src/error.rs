use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("subsystem index {0} listed more than once")]
    DuplicateIndex(usize),

    #[error("subsystem index {index} out of range for a register of {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("basis label {label} is invalid for a subsystem of dimension {dim}")]
    InvalidLabel { label: usize, dim: usize },

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("coefficients are not normalized (sum of squared moduli = {0})")]
    NotNormalized(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("simultaneous diagonalization failed (residual {0:e})")]
    Diagonalization(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown name: {0}")]
    UnknownName(String),
}
