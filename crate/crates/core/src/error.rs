use crate::operators::Interval;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("window {inner} shifted by {shift} does not fit inside {target}")]
    WindowOutOfRange {
        inner: Interval,
        shift: i64,
        target: Interval,
    },

    #[error("interval mismatch: {0}")]
    IntervalMismatch(String),

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("matrix has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero operator where a nonzero positive semidefinite one is required")]
    ZeroOperator,

    #[error("negative eigenvalue {0:e} in a positive semidefinite argument")]
    NegativeEigenvalue(f64),

    #[error(
        "density is singular (min eigenvalue {0:e}); use a support-restricted comparison instead"
    )]
    SingularDensity(f64),

    #[error("operators do not commute (commutator max-norm {0:e})")]
    NonCommuting(f64),

    #[error("relative entropy is infinite at n = {n} (support violation)")]
    InfiniteEntropy { n: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
