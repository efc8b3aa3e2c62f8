use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("k = {k} exceeds the ambient dimension {dim}")]
    KExceedsDimension { k: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("region carries zero mass")]
    ZeroMassRegion,

    #[error("requested mass {requested} exceeds total mass {total}")]
    MassExceedsTotal { requested: f64, total: f64 },

    #[error("exact enumeration needs {tuples} tuples, budget is {budget}; use the sampled estimator")]
    BudgetExceeded { tuples: u128, budget: u64 },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("malformed point cloud: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
