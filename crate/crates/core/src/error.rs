use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no legal districting plan could be constructed")]
    InitializationFailure,
    #[error("not found: {0}")]
    NotFound(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
