use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("all {0} columns have zero median absolute deviation")]
    DegenerateColumns(usize),

    #[error("symmetric eigensolver failed to converge")]
    EigenNonConvergence,

    #[error("exact fit: an h-subset of {h} observations has singular scatter")]
    ExactFit { h: usize },

    #[error("scatter matrix is not invertible")]
    SingularScatter,

    #[error("distance calibration invalid: {0}")]
    Calibration(String),

    #[error("artifact injection failed: {0}")]
    Artifact(String),

    #[error("report serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True when the failure came from the input or configuration rather
    /// than from the numerics. The CLI maps this to its exit codes.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Format(_)
                | Error::Dimension(_)
                | Error::NonFinite { .. }
                | Error::Config(_)
                | Error::Serialize(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
