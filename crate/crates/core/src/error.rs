use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("vector is not orthogonal to the safe direction (inner product {0:e})")]
    NotOrthogonal(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("numerical degeneracy: pivot magnitude {0:e}")]
    NumericalDegeneracy(f64),

    #[error("horizon of {horizon} rounds exhausted before the stopping rule triggered (gap too small for horizon)")]
    HorizonExhausted { horizon: usize },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("empty confidence set: {0}")]
    EmptyConfidenceSet(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
