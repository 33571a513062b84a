use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty pattern: {0}")]
    EmptyPattern(String),

    #[error("index {index} out of range for {len} points")]
    OutOfRange { index: usize, len: usize },

    #[error("annotations {first} and {second} fall on the same pixel")]
    CoincidentPoints { first: usize, second: usize },

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("insufficient points: need {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("class {0} has no cells")]
    EmptyClass(usize),

    #[error("inconsistent cluster model: {0}")]
    InconsistentModel(String),

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<u64>, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u8, expected: u8 },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn inconsistent(msg: impl Into<String>) -> Self {
        Error::InconsistentInput(msg.into())
    }

    pub(crate) fn parse(line: Option<u64>, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Parse { .. } | Error::Version { .. } | Error::Io(_) => 3,
            Error::InconsistentInput(_)
            | Error::InconsistentModel(_)
            | Error::CoincidentPoints { .. } => 4,
            Error::InvalidArgument(_)
            | Error::EmptyPattern(_)
            | Error::OutOfRange { .. }
            | Error::InsufficientPoints { .. }
            | Error::EmptyClass(_) => 5,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line());
        let message = err.to_string();
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            _ => Error::parse(line, message),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            return Error::Io(err.into());
        }
        Error::parse(Some(err.line() as u64), err.to_string())
    }
}
