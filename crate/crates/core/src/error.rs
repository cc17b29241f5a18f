use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the EVI engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown locale `{0}` (expected en-GB, pl-PL or fr-FR)")]
    UnknownLocale(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown profile id `{0}`")]
    UnknownProfile(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("locale mismatch: dataset is {dataset}, knowledge base is {kb}")]
    LocaleMismatch { dataset: String, kb: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad input data rather than bad configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::UnknownProfile(_) | Error::LocaleMismatch { .. } | Error::Io { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
