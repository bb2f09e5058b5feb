use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension d={0}")]
    UnsupportedDimension(usize),

    #[error("degree {degree} exceeds the cap of {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input has even-degree energy fraction {fraction:e} above tolerance {tolerance:e}")]
    EvenContent { fraction: f64, tolerance: f64 },

    #[error("sample too small: need at least {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("replication {replication} at n={n}: {source}")]
    Replication {
        replication: usize,
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line() as usize);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
            kind => Error::Parse { line, msg: format!("{kind:?}") },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
