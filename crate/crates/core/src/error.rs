use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint requires a support mask")]
    MissingSupport,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("image of side {side} is smaller than the {window}x{window} window")]
    ImageTooSmall { side: usize, window: usize },

    #[error("weight file: {0}")]
    Weights(#[from] WeightError),

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("measurement file: {0}")]
    MeasurementFormat(String),

    #[error("metrics file: {0}")]
    ReportFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failure categories when loading a CNN weight file.
#[derive(Debug, Error)]
pub enum WeightError {
    #[error("cannot read {path}: {source}")]
    Missing {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("inconsistent layer shapes: {0}")]
    Shape(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
}
