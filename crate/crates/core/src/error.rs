use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {format} input: {msg}")]
    Format { format: &'static str, msg: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("zero-norm row {row} in dataset `{dataset}`")]
    ZeroNormRow { dataset: String, row: usize },

    #[error("rank deficiency: requested rank {requested}, numerical rank {available}")]
    RankDeficient { requested: usize, available: usize },

    #[error("optimization diverged: {0}")]
    Diverged(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("distance entry ({i}, {j}) failed: {source}")]
    Entry {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
