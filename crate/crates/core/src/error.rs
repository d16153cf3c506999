use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid range: expected i < j < {len}, got ({i}, {j})")]
    InvalidRange { i: usize, j: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("driver is not geometric (symmetric-part defect {defect:e}); pass allow_non_geometric to override")]
    NonGeometric { defect: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
