use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while loading data, fitting models or evaluating features.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("row {row}: label must be 0 or 1, found {value}")]
    NonBinaryLabel { row: usize, value: f64 },

    #[error("training needs at least {required} samples, found {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("prior precision must be positive and finite, got {0}")]
    InvalidPrecision(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("{module}: {message}")]
    Numerical {
        module: &'static str,
        message: String,
    },

    #[error("algebra has no identity element; cannot place a constant term")]
    MissingIdentity,
}

impl Error {
    pub(crate) fn numerical(module: &'static str, message: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            message: message.into(),
        }
    }

    /// True for errors caused by the input data rather than by the numerics
    /// or the configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::EmptyFile { .. }
                | Error::MalformedRow { .. }
                | Error::NonBinaryLabel { .. }
                | Error::TooFewSamples { .. }
                | Error::DimensionMismatch { .. }
        )
    }
}
