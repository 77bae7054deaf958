use thiserror::Error;

pub type Result<T> = std::result::Result<T, AptfError>;

#[derive(Debug, Error)]
pub enum AptfError {
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("bad spec: {0}")]
    BadSpec(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("timestamps not strictly increasing at row {row}")]
    NonMonotonicTimestamps { row: usize },

    #[error("series of length {length} too short for lookback {lookback} + horizon {horizon}")]
    TooShort {
        length: usize,
        lookback: usize,
        horizon: usize,
    },

    #[error("{0} split would be empty")]
    EmptySplit(&'static str),

    #[error("{n} samples cannot fill {k} buckets")]
    TooFewSamples { n: usize, k: usize },

    #[error("cannot trim {trim} weights from a schedule of {k} buckets")]
    BadTrim { k: usize, trim: usize },

    #[error("bucket group with {k} buckets (need at least 2)")]
    GroupTooSmall { k: usize },

    #[error("negative sample weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("non-finite gradient in parameter {param}")]
    NonFiniteGradient { param: usize },

    #[error("dataset carries no corruption ground truth")]
    NoGroundTruth,

    #[error("denominator is zero")]
    ZeroDenominator,

    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("cannot open {path}: {source}")]
    Open {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn shape_err(expected: impl Into<String>, got: impl Into<String>) -> AptfError {
    AptfError::ShapeMismatch {
        expected: expected.into(),
        got: got.into(),
    }
}
