use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("session {0} has no frames")]
    EmptySession(String),

    #[error("every feature was removed as null or constant")]
    DegenerateDataset,

    #[error("unclassified features: {}", .0.join(", "))]
    UnclassifiedFeatures(Vec<String>),

    #[error("Cronbach's alpha is undefined: total-score variance is zero")]
    UndefinedAlpha,

    #[error("session {0} has no successfully tracked frames")]
    UnusableSession(String),

    #[error("training labels contain a single class")]
    DegenerateLabels,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("reports are not comparable: {0}")]
    Comparison(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
