use std::collections::HashSet;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::MediumError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EulerMaruyama,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeConfig {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "unit")]
    pub epsilon: f64,
    #[serde(default)]
    pub scheme: Scheme,
    pub seed: u64,
    #[serde(default)]
    pub path_index: u64,
    /// Keep every `record_every`-th state in the trajectory.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn unit() -> f64 {
    1.0
}

fn one() -> usize {
    1
}

/// Ensembles validate once per path; the step-size warning is logged once
/// per `(dt, K)`.
fn first_warning(dt: f64, bound: f64) -> bool {
    static SEEN: OnceLock<Mutex<HashSet<(u64, u64)>>> = OnceLock::new();
    SEEN.get_or_init(Default::default)
        .lock()
        .map_or(true, |mut seen| seen.insert((dt.to_bits(), bound.to_bits())))
}

/// `1e-3 · min(1, 1/K²)`.
pub fn default_dt(bound: f64) -> f64 {
    1e-3 * (1.0f64).min(1.0 / (bound * bound))
}

impl SdeConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon,
            epsilon: 1.0,
            scheme: Scheme::EulerMaruyama,
            seed,
            path_index: 0,
            record_every: 1,
        }
    }

    pub fn with_path(mut self, path_index: u64) -> Self {
        self.path_index = path_index;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.dt - 1e-9).ceil() as u64
    }

    /// Check the configuration against the coefficient bound `K`; warns
    /// (but does not fail) when `dt·K² > 0.1`.
    pub fn validate(&self, bound: f64) -> Result<(), MediumError> {
        let bad = |msg: String| Err(MediumError::InvalidParameter(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be >= dt {}", self.horizon, self.dt));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        if self.dt * bound * bound > 0.1 && first_warning(self.dt, bound) {
            log::warn!(
                "dt·K² = {:.3} exceeds 0.1 (dt = {}, K = {bound}); expect discretization bias",
                self.dt * bound * bound,
                self.dt
            );
        }
        Ok(())
    }
}
