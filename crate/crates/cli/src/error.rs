use thiserror::Error;

/// Command failure, mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// A verification or identity check did not pass.
    #[error("check failed: {0}")]
    Check(String),
    /// Bad flags, configuration or parameters.
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<oflx::Error> for CliError {
    fn from(e: oflx::Error) -> Self {
        match e {
            oflx::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
