use thiserror::Error;

/// Errors raised anywhere in the modeling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("pressure solve failed at pivot {pivot} (value {value:e}): {reason}")]
    LinearSolve {
        pivot: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("saturation {value} left [0, 1] in cell {cell} (CFL logic error)")]
    SaturationBounds { cell: usize, value: f64 },

    #[error("non-finite value produced by block `{block}` at step {step}")]
    NonFinite { step: usize, block: &'static str },

    #[error("undefined denominator: reference has zero Frobenius norm")]
    UndefinedDenominator,

    #[error("models were not fitted on the same data: {0}")]
    Provenance(String),

    #[error("model file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
