use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cea_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use cea_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Core(E::Domain(_) | E::CellOutOfRange { .. }) => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
