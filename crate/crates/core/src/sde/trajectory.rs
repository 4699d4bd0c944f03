use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::SdeConfig;
use crate::EstimateError;

/// Recorded path. States are stored row-major, `dim` values per record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub spacing: f64,
    pub steps: Vec<u64>,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub medium_id: String,
    pub seed: u64,
    pub path_index: u64,
    /// First state coordinate is the (noisy) time coordinate.
    pub augmented: bool,
}

impl Trajectory {
    pub fn new(dim: usize, spacing: f64, medium_id: String, config: &SdeConfig, augmented: bool) -> Self {
        Self {
            dim,
            spacing,
            steps: Vec::new(),
            times: Vec::new(),
            states: Vec::new(),
            medium_id,
            seed: config.seed,
            path_index: config.path_index,
            augmented,
        }
    }

    pub fn push(&mut self, step: u64, t: f64, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        self.steps.push(step);
        self.times.push(t);
        self.states.extend_from_slice(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Spatial part of state `n` (drops the time coordinate if augmented).
    pub fn position(&self, n: usize) -> &[f64] {
        let s = self.state(n);
        if self.augmented {
            &s[1..]
        } else {
            s
        }
    }

    /// CSV rows `path, step, t, x1..x_dim`; the header is written when
    /// `header` is set.
    pub fn write_csv<W: Write>(&self, writer: &mut csv::Writer<W>, header: bool) -> csv::Result<()> {
        if header {
            let mut h = vec!["path".to_string(), "step".into(), "t".into()];
            h.extend((1..=self.dim).map(|i| format!("x{i}")));
            writer.write_record(&h)?;
        }
        for n in 0..self.len() {
            let mut row = vec![
                self.path_index.to_string(),
                self.steps[n].to_string(),
                format!("{:.16e}", self.times[n]),
            ];
            row.extend(self.state(n).iter().map(|v| format!("{v:.16e}")));
            writer.write_record(&row)?;
        }
        Ok(())
    }
}

/// `t ↦ ε X_{t/ε²}` on `[0, macro_horizon]`, keeping the recorded nodes.
pub fn rescale(traj: &Trajectory, epsilon: f64, macro_horizon: f64) -> Result<Trajectory, EstimateError> {
    if !(epsilon > 0.0) {
        return Err(EstimateError::InvalidSpec(format!("epsilon must be positive, got {epsilon}")));
    }
    let need = macro_horizon / (epsilon * epsilon);
    if traj.horizon() < need * (1.0 - 1e-12) {
        return Err(EstimateError::InsufficientHorizon {
            have: traj.horizon(),
            need,
        });
    }
    let eps2 = epsilon * epsilon;
    let mut out = Trajectory {
        spacing: traj.spacing * eps2,
        steps: Vec::new(),
        times: Vec::new(),
        states: Vec::new(),
        ..traj.clone()
    };
    let mut buf = vec![0.0; traj.dim];
    for n in 0..traj.len() {
        if traj.times[n] > need * (1.0 + 1e-12) {
            break;
        }
        for (b, v) in buf.iter_mut().zip(traj.state(n)) {
            *b = epsilon * v;
        }
        if traj.augmented {
            buf[0] = eps2 * traj.state(n)[0];
        }
        out.push(traj.steps[n], traj.times[n] * eps2, &buf);
    }
    Ok(out)
}
