use thiserror::Error;

/// Errors produced by fuzzy-set construction, kernel evaluation and the
/// learning/IO layers built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a mathematical precondition (degree outside the
    /// unit interval, dimension mismatch, foreign ground space, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A kernel specification is malformed or does not fit the data it is
    /// applied to.
    #[error("configuration error: {0}")]
    Config(String),

    /// A linear-algebra step failed (singular system, non-finite result).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Input data contains values the numerics cannot work with.
    #[error("data error: {0}")]
    Data(String),

    /// Kernel evaluation failed for a specific pair of items.
    #[error("kernel evaluation failed for pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    /// A file could not be parsed.
    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    /// A parsed document violates a data invariant.
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end: 2 for anything the
    /// user can fix in their inputs, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Pair { source, .. } => source.exit_code(),
            Error::Numeric(_) | Error::Data(_) => 3,
            Error::Io(_) => 1,
            Error::Domain(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Validation { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
