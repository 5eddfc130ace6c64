use thiserror::Error;

#[derive(Debug, Error)]
pub enum FcsError {
    #[error("invalid grid size {0}: must be at least 2")]
    InvalidSize(usize),

    #[error("grid size {0} is not a prime power; only N = p^n is supported")]
    UnsupportedComposite(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("slope {0} is out of range for this geometry")]
    SlopeOutOfRange(String),

    #[error("sinogram is missing projections for {missing} slope(s)")]
    IncompleteSinogram { missing: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mask selects no points")]
    EmptyMask,

    #[error(
        "reconstruction diverged at iteration {iteration}: residual {residual:e} > limit {limit:e}"
    )]
    Diverged {
        iteration: usize,
        residual: f64,
        limit: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, FcsError>;

pub(crate) fn mismatch(expected: impl ToString, actual: impl ToString) -> FcsError {
    FcsError::DimensionMismatch {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
