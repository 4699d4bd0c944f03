use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediumError {
    #[error("point {coordinate}={value} lies outside the sampled extent [{lo}, {hi})")]
    OutOfExtent {
        coordinate: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid medium parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("U field violates the ellipticity bound alpha={alpha}: eigenvalue {eigenvalue} at {at:?}")]
    Ellipticity {
        alpha: f64,
        eigenvalue: f64,
        at: [f64; 3],
    },
}

#[derive(Debug, Error)]
pub enum CorrectorError {
    #[error("Krylov solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("right-hand side has non-negligible π-mean {mean:.3e}")]
    NonZeroMean { mean: f64 },
    #[error("extrapolation needs {needed} solutions, got {got}")]
    TooFewSolutions { needed: usize, got: usize },
    #[error("λ sequence is not geometric and decreasing: {0:?}")]
    BadLambdaSequence(Vec<f64>),
    #[error("gradient differences diverge: {0:?}")]
    Diverging(Vec<f64>),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("medium is not periodic; periodize it before building a cell problem")]
    NotPeriodic,
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("invalid ensemble specification: {0}")]
    InvalidSpec(String),
    #[error("{failed} of {total} paths failed (first: {first})")]
    PathFailures {
        failed: usize,
        total: usize,
        first: MediumError,
    },
    #[error("trajectory horizon {have} is shorter than the required {need}")]
    InsufficientHorizon { have: f64, need: f64 },
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
}
