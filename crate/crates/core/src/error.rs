use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("phase {index} is not unimodular (|theta| = {modulus})")]
    NotUnimodular { index: usize, modulus: f64 },

    #[error("singular Gram matrix: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (last value {last_value})")]
    Convergence { iterations: usize, last_value: f64 },

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(context: &'static str, expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        context,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
