use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the protocol, simulation and attack code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty trace")]
    EmptyTrace,
    #[error("invalid privacy parameters: {0}")]
    InvalidParams(String),
    #[error("at least one master required")]
    NoMasters,
    #[error("consumption cannot be negative (meter {meter}, instant {instant}: {value})")]
    NegativeConsumption { meter: usize, instant: usize, value: f64 },
    #[error("partial billing period: expected {expected} readings, got {got}")]
    PartialBillingPeriod { expected: usize, got: usize },
    #[error("duplicate error report for meter {meter} in period {period}")]
    DuplicateErrorReport { meter: usize, period: usize },
    #[error("cannot select {m} distinct masters from {n} meters")]
    TooManyMasters { m: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration key `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },
    #[error("window exceeds profile: 2P+1 = {window} > T = {len}")]
    WindowExceedsProfile { window: usize, len: usize },
    #[error("invalid filter window P = {0}")]
    InvalidWindow(usize),
    #[error("undefined relative error: original total is zero")]
    UndefinedRelativeError,
    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),
    #[error("invalid reading at meter {meter}, instant {instant}: {value}")]
    InvalidReading { meter: String, instant: usize, value: String },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
