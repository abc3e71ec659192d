use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed CSV: {message}", path.display())]
    Csv { path: PathBuf, message: String },

    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("{}: row {row}: cannot parse date `{value}` (expected YYYY-MM-DD)", path.display())]
    BadDate {
        path: PathBuf,
        row: u64,
        value: String,
    },

    #[error("{}: row {row}: non-numeric value `{value}`", path.display())]
    BadValue {
        path: PathBuf,
        row: u64,
        value: String,
    },

    #[error("series `{series}`: duplicate date {date} (row {row})")]
    DuplicateDate {
        series: String,
        date: NaiveDate,
        row: u64,
    },

    #[error("series `{series}`: dates are not strictly increasing at index {index}")]
    Unordered { series: String, index: usize },

    #[error("series `{series}`: non-finite value at index {index}")]
    NonFinite { series: String, index: usize },

    #[error("series `{series}`: non-positive value {value} at {date}")]
    NonPositive {
        series: String,
        date: NaiveDate,
        value: f64,
    },

    #[error("series `{series}` too short: {len} observations, need at least {min}")]
    TooShort {
        series: String,
        len: usize,
        min: usize,
    },

    #[error("lag {lag} must be smaller than the series length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("series have no dates in common")]
    EmptyIntersection,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dates of `{left}` and `{right}` differ")]
    DateMismatch { left: String, right: String },

    #[error("regressor `{0}` is constant")]
    ConstantRegressor(String),

    #[error("series `{0}` is constant")]
    ConstantSeries(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("incompatible wavelet fields: {0}")]
    IncompatibleFields(String),

    #[error("coherence is degenerate at every cell: {0}")]
    AllDegenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
