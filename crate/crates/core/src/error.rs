use alloc::string::String;

/// Errors raised by the approximation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point set has {got} points, degree {degree} needs at least {needed}")]
    TooFewPoints { degree: usize, needed: usize, got: usize },

    #[error("points-not-unisolvent: design matrix loses rank in degree block {degree}")]
    PointsNotUnisolvent { degree: usize },

    #[error("exactness-unachievable: residual {residual:e} exceeds tolerance {tolerance:e}")]
    ExactnessUnachievable { residual: f64, tolerance: f64 },

    #[error("not-positive: weight {index} is {weight:e}")]
    NotPositive { index: usize, weight: f64 },

    #[error("cardinality: {points} points cannot carry a positive rule of exactness {exactness}")]
    Cardinality { points: usize, exactness: usize },

    #[error("insufficient-exactness: rule is exact to degree {available}, operator needs {required}")]
    InsufficientExactness { required: usize, available: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
