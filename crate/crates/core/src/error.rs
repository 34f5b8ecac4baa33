use thiserror::Error;

/// Errors raised by field construction, operators and studies.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's domain (bad parameter, under-resolution, failed precondition).
    #[error("domain error: {0}")]
    Domain(String),
    /// Fields or grids that do not match.
    #[error("shape error: {0}")]
    Shape(String),
    /// Malformed snapshot or sidecar content.
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
