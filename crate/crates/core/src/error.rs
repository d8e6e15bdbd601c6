use thiserror::Error;

use crate::pgcl::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver returned unknown")]
    Unknown,
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("cancelled")]
    Cancelled,
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
