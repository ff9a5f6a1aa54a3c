use thiserror::Error;

/// Errors produced by the library.
///
/// `UnsupportedLevel` and `GenusTooSmall` are expected outcomes for levels
/// outside the range the constructions cover; `Inconsistent` and
/// `NoSolution` indicate a broken identity and should never surface for
/// admissible input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported level {level}: {reason}")]
    UnsupportedLevel { level: u64, reason: String },

    #[error("genus too small: X0({level}) has genus {genus}, need at least 2")]
    GenusTooSmall { level: u64, genus: u64 },

    #[error("linear system has no solution")]
    NoSolution,

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn unsupported(level: u64, reason: impl Into<String>) -> Self {
        Error::UnsupportedLevel {
            level,
            reason: reason.into(),
        }
    }

    pub(crate) fn inconsistent(msg: impl Into<String>) -> Self {
        Error::Inconsistent(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
