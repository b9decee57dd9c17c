//! Crate-wide error type.

use crate::domain::Metric;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid option {option}: {message}")]
    InvalidOption { option: String, message: String },

    #[error("invalid configuration at option {option}: {message}")]
    InvalidConfiguration { option: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, {place}")]
    NonFinite { row: usize, place: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("requested {requested} distinct configurations but the space holds only {cardinality}")]
    SpaceExhausted { requested: usize, cardinality: u128 },

    #[error("metric {metric} absent from samples {indices:?}")]
    MetricAbsent { metric: Metric, indices: Vec<usize> },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("actual value is zero at index {0}: relative error undefined")]
    ZeroActual(usize),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("kernel matrix is not positive definite even after jitter escalation")]
    IllConditionedKernel,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("unsupported model format version {0}")]
    UnsupportedFormatVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
