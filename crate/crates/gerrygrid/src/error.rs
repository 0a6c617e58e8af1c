use std::io;
use std::path::{Path, PathBuf};

/// Errors raised by file handling and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] gerrygrid_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{origin}:{line}: {message}")]
    Parse { origin: String, line: u64, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Error {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn parse(origin: impl Into<String>, line: u64, message: impl Into<String>) -> Error {
        Error::Parse { origin: origin.into(), line, message: message.into() }
    }

    /// Process exit status: 1 for bad input, 2 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 2,
            _ => 1,
        }
    }
}
