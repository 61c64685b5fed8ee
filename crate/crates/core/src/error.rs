use thiserror::Error;

/// Errors raised by the estimators, checks and matrix loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}) out of range for dimension {n}")]
    Range { i: usize, j: usize, n: usize },

    #[error("dimension {n} exceeds the {what} cap of {cap}")]
    Capacity {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("row {row} violates the sampling restriction: s * q_i = {rate} > 1")]
    Restriction { row: usize, rate: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("matrix is not symmetric: |A[{i}][{j}] - A[{j}][{i}]| = {gap}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
