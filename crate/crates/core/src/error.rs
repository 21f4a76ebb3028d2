use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidArray(String),

    #[error("window width {width} out of range 1..={n_fft}")]
    WindowWidth { width: usize, n_fft: usize },

    #[error("invalid beamspace window: {0}")]
    InvalidWindow(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("singular covariance: {0}; use a nonzero noise floor")]
    Singular(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("infeasible schedule: placed {achieved} of {requested} users ({reason})")]
    Infeasible {
        requested: usize,
        achieved: usize,
        reason: String,
    },

    #[error("field of view infeasible: {0}")]
    FieldOfView(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{0}: empty path file")]
    EmptyFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
