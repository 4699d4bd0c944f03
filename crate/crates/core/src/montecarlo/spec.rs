use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::medium::{CoefficientField, MediumInstance, MediumSpec, Periodicity, PointSample};
use crate::rng::{mix_seed, uniform_rng};
use crate::{EstimateError, MediumError};

/// How the environment at time 0 is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDistribution {
    /// Periodic media: uniform shift of the space-time cell, accepted with
    /// probability `e^{−2(V + K)}`. Random media: a fresh ω (already
    /// stationary), origin 0.
    #[default]
    Pi,
    /// Start every path from the unshifted instance.
    Origin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    /// Paths per medium realization.
    pub n_paths: usize,
    #[serde(default = "one")]
    pub n_media: usize,
    pub epsilon: f64,
    /// Macroscopic horizon `T`; micro horizon is `T/ε²`.
    pub macro_horizon: f64,
    /// Macroscopic observation times in `(0, T]`.
    pub observation_times: Vec<f64>,
    pub master_seed: u64,
    pub dt: f64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub initial: InitialDistribution,
}

fn one() -> usize {
    1
}

fn default_batches() -> usize {
    20
}

impl EnsembleSpec {
    pub fn total_paths(&self) -> usize {
        self.n_paths * self.n_media
    }

    pub fn micro_horizon(&self) -> f64 {
        self.macro_horizon / (self.epsilon * self.epsilon)
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |m: String| Err(EstimateError::InvalidSpec(m));
        if self.n_paths == 0 || self.n_media == 0 {
            return bad("n_paths and n_media must be positive".into());
        }
        if self.total_paths() < 100 {
            return bad(format!("n_paths·n_media = {} < 100", self.total_paths()));
        }
        if !(self.epsilon > 0.0 && self.macro_horizon > 0.0 && self.dt > 0.0) {
            return bad("epsilon, macro_horizon and dt must be positive".into());
        }
        if self.observation_times.is_empty()
            || self
                .observation_times
                .iter()
                .any(|&t| !(t > 0.0 && t <= self.macro_horizon * (1.0 + 1e-12)))
            || self.observation_times.windows(2).any(|w| w[1] <= w[0])
        {
            return bad(format!(
                "observation times {:?} must be increasing and lie in (0, {}]",
                self.observation_times, self.macro_horizon
            ));
        }
        if self.batches < 2 || self.batches > self.total_paths() {
            return bad(format!("batches must lie in [2, {}]", self.total_paths()));
        }
        if self.micro_horizon() < self.dt {
            return bad("micro horizon shorter than dt".into());
        }
        Ok(())
    }

    /// Integrator step index of each observation time.
    pub fn observation_steps(&self) -> Vec<u64> {
        let eps2 = self.epsilon * self.epsilon;
        self.observation_times
            .iter()
            .map(|t| ((t / eps2) / self.dt).round().max(1.0) as u64)
            .collect()
    }
}

const SALT_MEDIUM: u64 = 0x6d65_6469_756d;
const SALT_NOISE: u64 = 0x6e6f_6973_65;
const SALT_SHIFT: u64 = 0x7368_6966_74;

/// Source of medium realizations: one fixed field for periodic media,
/// independent draws for random media.
#[derive(Clone)]
pub struct MediumFamily {
    spec: Option<MediumSpec>,
    fixed: Option<Arc<dyn CoefficientField>>,
}

impl MediumFamily {
    pub fn new(spec: MediumSpec, master_seed: u64) -> Result<Self, MediumError> {
        let fixed = if spec.is_random() {
            None
        } else {
            Some(spec.build(master_seed)?)
        };
        Ok(Self { spec: Some(spec), fixed })
    }

    /// A single deterministic field shared by every path.
    pub fn from_field(field: Arc<dyn CoefficientField>) -> Self {
        Self {
            spec: None,
            fixed: Some(field),
        }
    }

    pub fn dim(&self) -> usize {
        match (&self.fixed, &self.spec) {
            (Some(f), _) => f.dim(),
            (None, Some(s)) => s.dim(),
            (None, None) => unreachable!(),
        }
    }

    pub fn is_random(&self) -> bool {
        self.fixed.is_none()
    }

    /// Medium seed of realization `index`.
    pub fn medium_seed(master_seed: u64, index: usize) -> u64 {
        mix_seed(master_seed ^ SALT_MEDIUM, index as u64)
    }

    pub fn draw(&self, master_seed: u64, index: usize) -> Result<MediumInstance, MediumError> {
        match &self.fixed {
            Some(f) => Ok(MediumInstance::new(f.clone())),
            None => self
                .spec
                .as_ref()
                .expect("random family has a spec")
                .instance(Self::medium_seed(master_seed, index)),
        }
    }
}

pub fn noise_seed(master_seed: u64, medium_index: usize) -> u64 {
    mix_seed(master_seed ^ SALT_NOISE, medium_index as u64)
}

/// Lower bound for `V` on the periodic cell: the minimum over a 64-point
/// grid per axis less a margin of `0.01·K`. Zero for random media.
pub fn potential_floor(medium: &MediumInstance) -> Result<f64, MediumError> {
    let Periodicity::Periodic { space, .. } = medium.field().periodicity() else {
        return Ok(0.0);
    };
    const RES: usize = 64;
    let d = space.len();
    let mut s = PointSample::new(d);
    let mut x = vec![0.0; d];
    let mut vmin = f64::INFINITY;
    for lin in 0..RES.pow(d as u32) {
        let mut r = lin;
        for j in 0..d {
            x[j] = (r % RES) as f64 * space[j] / RES as f64;
            r /= RES;
        }
        medium.sample(0.0, &x, &mut s)?;
        vmin = vmin.min(s.v);
    }
    Ok(vmin - 0.01 * medium.field().bound())
}

/// Draw the shift `(s, y)` of a π-distributed start for periodic media:
/// uniform proposals on the cell accepted with probability
/// `e^{−2(V − floor)}`.
pub fn sample_initial_shift(
    medium: &MediumInstance,
    floor: f64,
    master_seed: u64,
    path: u64,
) -> Result<(f64, Vec<f64>), MediumError> {
    let d = medium.dim();
    match medium.field().periodicity() {
        Periodicity::StationaryRandom => Ok((0.0, vec![0.0; d])),
        Periodicity::Periodic { time, space, .. } => {
            let mut rng = uniform_rng(mix_seed(master_seed, SALT_SHIFT), path);
            let mut s = PointSample::new(d);
            let mut y = vec![0.0; d];
            for _ in 0..1_000_000 {
                let t0 = rng.random::<f64>() * time;
                for (yj, p) in y.iter_mut().zip(&space) {
                    *yj = rng.random::<f64>() * p;
                }
                medium.sample(t0, &y, &mut s)?;
                let accept = (-2.0 * (s.v - floor)).exp();
                if accept > 1.0 + 1e-12 {
                    return Err(MediumError::InvalidParameter(format!(
                        "potential {} below the sampling floor {floor}",
                        s.v
                    )));
                }
                if rng.random::<f64>() < accept {
                    return Ok((t0, y));
                }
            }
            Err(MediumError::InvalidParameter("rejection sampling of π did not terminate".into()))
        }
    }
}
