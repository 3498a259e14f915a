use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {component}: expected {expected}, found {found}")]
    DimensionMismatch {
        component: String,
        expected: String,
        found: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("exhaustive search refused: {columns} columns exceeds the limit of {limit}")]
    OracleTooLarge { columns: usize, limit: usize },

    #[error("objective became non-finite at iteration {iteration}: {value}")]
    NonFinite { iteration: usize, value: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("no complete days survived ingestion of {0}")]
    NoDays(PathBuf),

    #[error("class names do not match: unmatched {0:?}")]
    ClassMismatch(Vec<String>),

    #[error("infeasible pulse placement for class {class}: {reason}")]
    Infeasible { class: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn mismatch(
        component: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            component: component.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical procedure itself rather than of its
    /// inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}
