use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A factor update or bound evaluation produced a non-finite moment or an
    /// unrepairable covariance.
    #[error("numerical failure in {factor}: {detail}")]
    Numerical { factor: String, detail: String },

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("{}: {detail}", path.display())]
    Parse { path: PathBuf, detail: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn numerical(factor: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numerical {
            factor: factor.into(),
            detail: detail.into(),
        }
    }

    pub fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical core as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
