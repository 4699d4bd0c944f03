use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::medium::MediumInstance;
use crate::sde::{FullDynamics, SdeConfig, Stepper};
use crate::{EstimateError, MediumError};

use super::spec::{noise_seed, potential_floor, sample_initial_shift, EnsembleSpec, InitialDistribution, MediumFamily};

/// Rescaled positions `Z_t = ε X_{t/ε²}` of every surviving path at every
/// observation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub dim: usize,
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// Medium realization of each surviving path.
    pub medium_index: Vec<usize>,
    /// `values[(p * times.len() + k) * dim + j]`.
    pub values: Vec<f64>,
    pub failed: usize,
    pub total: usize,
}

impl Ensemble {
    pub fn n_paths(&self) -> usize {
        self.medium_index.len()
    }

    pub fn z(&self, path: usize, time: usize) -> &[f64] {
        let o = (path * self.times.len() + time) * self.dim;
        &self.values[o..o + self.dim]
    }

    /// Paths drawn in medium `m`.
    pub fn restrict_to_medium(&self, m: usize) -> Ensemble {
        let stride = self.times.len() * self.dim;
        let mut out = Ensemble {
            dim: self.dim,
            epsilon: self.epsilon,
            times: self.times.clone(),
            medium_index: Vec::new(),
            values: Vec::new(),
            failed: 0,
            total: 0,
        };
        for (p, &mi) in self.medium_index.iter().enumerate() {
            if mi == m {
                out.medium_index.push(mi);
                out.values.extend_from_slice(&self.values[p * stride..(p + 1) * stride]);
            }
        }
        out.total = out.medium_index.len();
        out
    }
}

/// Instance seen by path `path` of medium `medium`, shifted to a
/// π-distributed start when requested.
pub(crate) fn path_instance(
    base: &MediumInstance,
    floor: f64,
    initial: InitialDistribution,
    master_seed: u64,
    path: u64,
) -> Result<MediumInstance, MediumError> {
    match initial {
        InitialDistribution::Origin => Ok(base.clone()),
        InitialDistribution::Pi => {
            let (s, y) = sample_initial_shift(base, floor, master_seed, path)?;
            Ok(base.shifted(s, &y))
        }
    }
}

/// Reject the run when more than 0.1% of paths failed.
pub(crate) fn check_failures<T>(results: &[Result<T, MediumError>]) -> Result<usize, EstimateError> {
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed * 1000 > results.len() {
        let first = results.iter().find_map(|r| r.as_ref().err()).unwrap().clone();
        return Err(EstimateError::PathFailures {
            failed,
            total: results.len(),
            first,
        });
    }
    if failed > 0 {
        log::warn!("{failed} of {} paths failed and were dropped", results.len());
    }
    Ok(failed)
}

/// Media with their potential floors.
pub(crate) fn draw_media(
    family: &MediumFamily,
    master_seed: u64,
    n: usize,
) -> Result<Vec<(MediumInstance, f64)>, EstimateError> {
    (0..n)
        .into_par_iter()
        .map(|m| {
            let inst = family.draw(master_seed, m)?;
            let floor = potential_floor(&inst)?;
            Ok((inst, floor))
        })
        .collect()
}

/// Simulate the ensemble. Paths are indexed globally as
/// `medium * n_paths + k`; results do not depend on the thread count.
pub fn run_ensemble(family: &MediumFamily, spec: &EnsembleSpec) -> Result<Ensemble, EstimateError> {
    spec.validate()?;
    let d = family.dim();
    let media = draw_media(family, spec.master_seed, spec.n_media)?;
    let steps = spec.observation_steps();
    let horizon = *steps.last().unwrap() as f64 * spec.dt;
    let n_obs = steps.len();
    let total = spec.total_paths();

    let results: Vec<Result<Vec<f64>, MediumError>> = (0..total)
        .into_par_iter()
        .map(|g| {
            let m = g / spec.n_paths;
            let inst = path_instance(&media[m].0, media[m].1, spec.initial, spec.master_seed, g as u64)?;
            let dynamics = FullDynamics::new(&inst);
            let cfg = SdeConfig::new(spec.dt, horizon, noise_seed(spec.master_seed, m)).with_path(g as u64);
            let mut stepper = Stepper::new(&dynamics, &cfg, &vec![0.0; d], 0.0)?;
            let mut out = Vec::with_capacity(n_obs * d);
            for &n in &steps {
                stepper.advance(n - stepper.step_index())?;
                let x = stepper.state();
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(MediumError::InvalidParameter(format!("path {g} diverged")));
                }
                out.extend(x.iter().map(|v| spec.epsilon * v));
            }
            Ok(out)
        })
        .collect();

    let failed = check_failures(&results)?;
    let mut ens = Ensemble {
        dim: d,
        epsilon: spec.epsilon,
        times: steps
            .iter()
            .map(|&n| n as f64 * spec.dt * spec.epsilon * spec.epsilon)
            .collect(),
        medium_index: Vec::with_capacity(total - failed),
        values: Vec::with_capacity((total - failed) * n_obs * d),
        failed,
        total,
    };
    for (g, r) in results.into_iter().enumerate() {
        if let Ok(v) = r {
            ens.medium_index.push(g / spec.n_paths);
            ens.values.extend(v);
        }
    }
    Ok(ens)
}
