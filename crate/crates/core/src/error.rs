use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("commutation factor rejected at generator pair ({i}, {j}): {reason}")]
    Factor { i: usize, j: usize, reason: String },

    #[error("operator shape mismatch: {0}")]
    Shape(String),

    #[error("singular operator: |det| = {det:e}")]
    Singular { det: f64 },

    #[error("reduction target mismatch: {0}")]
    VariantMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
