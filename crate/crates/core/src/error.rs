use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("field is in {found} space, expected {expected}")]
    WrongSpace {
        expected: &'static str,
        found: &'static str,
    },
    #[error("structural assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("non-finite value {what} at t = {time}")]
    NonFinite { what: &'static str, time: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
