use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("i/o error on {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{column}` mapped for field `{field}` is missing from the header")]
    MissingColumn { field: &'static str, column: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error("numerical failure on track {mmsi} at step {step}: {detail}")]
    Numerical { mmsi: u32, step: usize, detail: String },

    #[error("innovation covariance is singular (condition number {condition:e})")]
    SingularInnovation { condition: f64 },

    #[error("insufficient minority instances for SMOTE: {found} (need at least 2)")]
    InsufficientMinority { found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training data holds a single class")]
    SingleClass,

    #[error("unknown feature name `{0}`")]
    UnknownFeature(String),

    #[error("k = {k} exceeds the minority class count {count}")]
    TooManyFolds { k: usize, count: usize },

    #[error("leakage detected: synthetic row {row} found in a test partition")]
    Leakage { row: usize },
}

impl Error {
    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File { path: path.into(), source }
    }

    /// True for errors raised by the numerical core (filter divergence).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. } | Error::SingularInnovation { .. })
    }
}
