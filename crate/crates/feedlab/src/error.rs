//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Config or plan validation failed. Carries every violation found,
    /// not just the first.
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// Fewer search results than a treatment needs for its doses.
    #[error("sparse library: {found} {mode} result(s) for topic {topic:?}, need {need}")]
    SparseLibrary {
        topic: String,
        mode: String,
        found: usize,
        need: usize,
    },

    #[error("iteration index {index} out of range 1..={max}")]
    InvalidIteration { index: usize, max: usize },

    #[error("embedding provider {provider:?}: {message}")]
    Embedding { provider: String, message: String },

    #[error("{0}")]
    Analysis(String),

    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },

    #[error("manifest mismatch: {0}")]
    Manifest(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(vec![message.into()])
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
