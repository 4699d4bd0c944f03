use homog::{CorrectorError, EstimateError, MediumError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<homog::corrector::io::IoError> for CliError {
    fn from(e: homog::corrector::io::IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<MediumError> for CliError {
    fn from(e: MediumError) -> Self {
        match e {
            MediumError::InvalidParameter(_) | MediumError::DimensionMismatch { .. } | MediumError::Ellipticity { .. } => {
                CliError::Config(e.to_string())
            }
            MediumError::OutOfExtent { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CorrectorError> for CliError {
    fn from(e: CorrectorError) -> Self {
        match e {
            CorrectorError::BadLambdaSequence(_)
            | CorrectorError::TooFewSolutions { .. }
            | CorrectorError::GridMismatch(_)
            | CorrectorError::NotPeriodic
            | CorrectorError::InvalidParameter(_) => CliError::Config(e.to_string()),
            CorrectorError::Medium(m) => m.into(),
            CorrectorError::NotConverged { ref history, .. } => {
                let tail: Vec<String> = history
                    .iter()
                    .enumerate()
                    .rev()
                    .step_by((history.len() / 10).max(1))
                    .take(10)
                    .map(|(k, r)| format!("{k}:{r:.3e}"))
                    .collect();
                CliError::Numerical(format!("{e}; residual history (iteration:residual) {}", tail.join(" ")))
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::InvalidSpec(_) | EstimateError::InsufficientHorizon { .. } => CliError::Config(e.to_string()),
            EstimateError::Medium(m) => m.into(),
            EstimateError::Corrector(c) => c.into(),
            EstimateError::PathFailures { .. } => CliError::Numerical(e.to_string()),
        }
    }
}
