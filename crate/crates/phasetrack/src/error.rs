use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter violates a precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Inputs are syntactically valid but outside the mathematical domain
    /// of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem failure, with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    /// Stable process exit code: 2 config, 3 numeric/domain, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) => 2,
            Error::Domain(_) | Error::Numeric(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
