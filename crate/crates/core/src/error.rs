use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty estimate vector")]
    EmptyEstimateVector,

    #[error("non-finite value at index {index}: {value}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },

    #[error("undefined correct side: truth equals threshold ({threshold})")]
    TruthOnThreshold { threshold: f64 },

    #[error("beliefs and weights lengths differ: {beliefs} vs {weights}")]
    LengthMismatch { beliefs: usize, weights: usize },

    #[error("weights must be non-negative, finite, and sum to 1 (sum = {sum})")]
    BadWeightSum { sum: f64 },

    #[error("no dynamics: f_min and f_maj are both zero")]
    NoDynamics,

    #[error("majority share must lie strictly inside (0, 1), got {value}")]
    DegenerateShare { value: f64 },

    #[error("weight matrix row {row} sums to {sum}, expected 1")]
    BadRowSum { row: usize, sum: f64 },

    #[error("weight matrix entry ({row}, {col}) is negative or non-finite: {value}")]
    BadMatrixEntry { row: usize, col: usize, value: f64 },

    #[error("beliefs length {beliefs} does not match matrix size {n}")]
    SystemSizeMismatch { beliefs: usize, n: usize },

    #[error("no unique consensus: weight matrix is reducible or periodic")]
    NoUniqueConsensus,

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("revision curve: {0}")]
    BadCurve(String),

    #[error("unknown belief distribution '{0}' (expected 'normal' or 'lognormal')")]
    UnknownDistribution(String),

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("malformed header: expected '{expected}', found '{found}'")]
    BadHeader { expected: String, found: String },

    #[error("no trials in input")]
    NoTrials,

    #[error("invalid grid resolution {0}: must divide (0, 1) into at least two steps")]
    BadResolution(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
