use thiserror::Error;

/// Errors surfaced by scenario loading, configuration and analysis.
#[derive(Debug, Error)]
pub enum FsmError {
    /// Malformed or inconsistent scenario file.
    #[error("scenario validation failed: {0}")]
    Validation(String),

    /// Invalid run configuration or assumption set.
    #[error("configuration error: {0}")]
    Config(String),

    /// The exhaustive oracle was asked for more work than it is allowed to do.
    #[error("oracle refused: {0}")]
    OracleTooLarge(String),

    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FsmError {
    pub fn validation(msg: impl Into<String>) -> Self {
        FsmError::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        FsmError::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        FsmError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FsmError>;
