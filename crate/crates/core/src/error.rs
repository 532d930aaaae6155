use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid shape {width}x{height}: both sides must be at least 3")]
    InvalidShape { width: usize, height: usize },

    #[error("cell index {index} out of range for a population of {size}")]
    CellOutOfRange { index: usize, size: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}, token {token}: {message}")]
    Parse {
        line: usize,
        token: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// IO error whose message names the offending path.
    pub fn io_at(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }
}
