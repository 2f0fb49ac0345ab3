use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("weight is singular at orbit index {index} (x = {x}, value = {value})")]
    SingularEvaluation { index: usize, x: f64, value: f64 },

    #[error("row {row}: {reason}")]
    InvalidEntry { row: usize, reason: String },

    #[error("omega has {omega} entries but g has {g}")]
    LengthMismatch { omega: usize, g: usize },

    #[error("failed to parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("interval of length {len} cannot be split")]
    CannotSplit { len: usize },

    #[error("interval [{start}, {start}+{len}) is out of bounds for a sample of length {n}")]
    OutOfBounds { start: usize, len: usize, n: usize },

    #[error("parameter {name} = {value} is out of range: {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("transform {0} was not registered when the prefix sums were built")]
    MissingTransform(String),

    #[error("threshold error: {0}")]
    Threshold(String),

    #[error("{0} is only defined in unweighted mode (g = 1)")]
    UnsupportedMode(&'static str),

    #[error("window of length {len} exceeds the enumeration limit {max}")]
    Size { len: usize, max: usize },

    #[error("missing prerequisite class reports: {}", .0.join(", "))]
    Dependency(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
