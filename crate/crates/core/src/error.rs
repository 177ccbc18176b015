use thiserror::Error;

pub type Result<T> = std::result::Result<T, SofError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SofError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {what} at ({row}, {col})")]
    NonFinite { what: String, row: usize, col: usize },

    #[error("nonlinearity term S[{index}] is not skew-symmetric: max |S + S^T| = {violation:e}")]
    NotSkew { index: usize, violation: f64 },

    #[error("matrix is not symmetric: max |M - M^T| = {violation:e}")]
    NotSymmetric { violation: f64 },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("projection conditions fail: no stabilizing static output-feedback gain exists")]
    Infeasible,

    #[error("trajectory is empty")]
    EmptyTrajectory,
}
