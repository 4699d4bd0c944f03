//! Coefficient fields: the analytic periodic medium, the random chessboard,
//! diagnostic media, the drift formula and assumption validators.

pub mod chessboard;
pub mod diagnostic;
pub mod drift;
pub mod field;
pub mod instance;
pub mod mollifier;
pub mod periodic;
pub mod validate;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use chessboard::{make_chessboard_medium, ChessboardMedium, ChessboardParams, ChessboardRecord, StripeProcess};
pub use diagnostic::{ConstantMedium, LayeredMedium};
pub use drift::{control_drift, drift};
pub use field::{CoefficientField, ControlConstants, Periodicity, PointSample};
pub use instance::MediumInstance;
pub use mollifier::{BumpProfile, Mollifier, MollifierSpec};
pub use periodic::{make_periodic_medium, PeriodicMedium, UField};
pub use validate::{check_bound, validate_control, BoundReport, ControlReport};

use crate::MediumError;

/// Declarative description of a medium, as found in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumSpec {
    /// Constant `σ` (rows) and optional constant antisymmetric `H`.
    Constant {
        sigma: Vec<Vec<f64>>,
        #[serde(default)]
        h: Option<Vec<Vec<f64>>>,
    },
    /// One-dimensional `a = mean + amplitude·sin x`, `V = potential·cos x`.
    Layered {
        mean: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default)]
        potential: f64,
    },
    Periodic {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "identity_u")]
        u: UField,
    },
    Chessboard {
        p: f64,
        #[serde(default)]
        mollifier: MollifierSpec,
        #[serde(default)]
        extent: Option<usize>,
        #[serde(default)]
        period: Option<usize>,
        #[serde(default)]
        stretch: f64,
        /// Load the sampled randomness from a file written by `medium-sample`
        /// instead of drawing it.
        #[serde(default)]
        record: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}

fn identity_u() -> UField {
    UField::Identity
}

fn flatten(rows: &[Vec<f64>], what: &str) -> Result<Vec<f64>, MediumError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(MediumError::InvalidParameter(format!("{what} must be a nonempty square matrix")));
    }
    Ok(rows.concat())
}

impl MediumSpec {
    pub fn dim(&self) -> usize {
        match self {
            MediumSpec::Constant { sigma, .. } => sigma.len(),
            MediumSpec::Layered { .. } => 1,
            MediumSpec::Periodic { .. } | MediumSpec::Chessboard { .. } => 2,
        }
    }

    /// Whether the medium has its own randomness beyond the initial shift.
    pub fn is_random(&self) -> bool {
        matches!(self, MediumSpec::Chessboard { record: None, .. })
    }

    pub fn chessboard_params(&self, seed: u64) -> Option<ChessboardParams> {
        match self {
            MediumSpec::Chessboard {
                p,
                mollifier,
                extent,
                period,
                stretch,
                ..
            } => Some(ChessboardParams {
                p: *p,
                mollifier: *mollifier,
                seed,
                extent: extent.unwrap_or(1024),
                period: *period,
                stretch: *stretch,
            }),
            _ => None,
        }
    }

    /// Build the field. `seed` only matters for random media.
    pub fn build(&self, seed: u64) -> Result<Arc<dyn CoefficientField>, MediumError> {
        Ok(match self {
            MediumSpec::Constant { sigma, h } => {
                let s = flatten(sigma, "sigma")?;
                let h = h.as_deref().map(|h| flatten(h, "h")).transpose()?;
                Arc::new(ConstantMedium::new(s, h)?)
            }
            MediumSpec::Layered {
                mean,
                amplitude,
                potential,
            } => Arc::new(LayeredMedium::new(*mean, *amplitude, *potential)?),
            MediumSpec::Periodic { alpha, u } => Arc::new(make_periodic_medium(*alpha, *u)?),
            MediumSpec::Chessboard { record: Some(path), .. } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    MediumError::InvalidParameter(format!("cannot read {}: {e}", path.display()))
                })?;
                let record: ChessboardRecord = serde_json::from_str(&text).map_err(|e| {
                    MediumError::InvalidParameter(format!("bad chessboard record {}: {e}", path.display()))
                })?;
                Arc::new(ChessboardMedium::from_record(record)?)
            }
            MediumSpec::Chessboard { .. } => {
                Arc::new(make_chessboard_medium(self.chessboard_params(seed).unwrap())?)
            }
        })
    }

    pub fn instance(&self, seed: u64) -> Result<MediumInstance, MediumError> {
        Ok(MediumInstance::new(self.build(seed)?))
    }
}
