use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("degenerate input: {0}")]
    Degeneracy(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("zero weight on edges {0:?}")]
    ZeroWeight(Vec<usize>),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Argument(_)
            | Error::Domain(_)
            | Error::Degeneracy(_)
            | Error::Topology(_)
            | Error::Resolution(_)
            | Error::Parse(_) => 2,
            Error::Geometry(_) | Error::Numeric(_) | Error::ZeroWeight(_) | Error::Consistency(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(std::io::Error::other(e))
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
