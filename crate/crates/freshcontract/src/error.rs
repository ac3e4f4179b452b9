use std::fmt;

/// Errors produced by this crate.
#[derive(Debug)]
pub enum Error {
    /// A mathematical precondition was violated (non-positive input, zero
    /// vector, out-of-range argument).
    Domain(String),
    /// Containers disagree on shape or length.
    Structure(String),
    /// A configuration value is missing, inconsistent, or unusable.
    Config(String),
    /// A non-finite value surfaced where finite arithmetic was required.
    Numeric(String),
    /// A file or document could not be parsed.
    Parse(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Structure(msg) => write!(f, "structural error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T: Into<String>>(msg: T) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn structure<T: Into<String>>(msg: T) -> Error {
    Error::Structure(msg.into())
}

pub(crate) fn config<T: Into<String>>(msg: T) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn numeric<T: Into<String>>(msg: T) -> Error {
    Error::Numeric(msg.into())
}
