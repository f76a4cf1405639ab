use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions or hyperparameters that cannot describe a valid model.
    #[error("configuration error: {0}")]
    Config(String),
    /// The caller broke an operation's precondition (unlabeled example, empty group, ...).
    #[error("usage error: {0}")]
    Usage(String),
    #[error("untrained model: {0}")]
    Untrained(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("division by a zero counter")]
    DivisionDomain,
    #[error("capacity error: counter {value} exceeds reciprocal table depth {depth}")]
    Capacity { value: u64, depth: usize },
    /// The simulator was driven out of sequence.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    /// True for errors the caller can fix by changing arguments or config,
    /// as opposed to failures discovered while running.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Usage(_))
    }
}
