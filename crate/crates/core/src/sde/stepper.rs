use crate::medium::PointSample;
use crate::rng::{GaussianStream, AUX_STREAM};
use crate::MediumError;

use super::config::SdeConfig;
use super::dynamics::Dynamics;

/// Euler–Maruyama state machine for one path.
///
/// `X_{n+1} = X_n + b(τ_n, X_n) dt + σ(τ_n, X_n) √dt ξ_n` where the time
/// coordinate is `τ_n = n·dt + √δ √dt Σ_{k<n} ξ′_k`; at `δ = 0` it is
/// exactly `n·dt`.
pub struct Stepper<'a, D: Dynamics + ?Sized> {
    dynamics: &'a D,
    dt: f64,
    sqrt_dt: f64,
    sqrt_delta: f64,
    noise: GaussianStream,
    aux: Option<GaussianStream>,
    x: Vec<f64>,
    aux_sum: f64,
    step: u64,
    scratch: PointSample,
    b: Vec<f64>,
    sigma: Vec<f64>,
    xi: Vec<f64>,
}

impl<'a, D: Dynamics + ?Sized> Stepper<'a, D> {
    pub fn new(dynamics: &'a D, config: &SdeConfig, start: &[f64], delta: f64) -> Result<Self, MediumError> {
        let d = dynamics.dim();
        if start.len() != d {
            return Err(MediumError::DimensionMismatch {
                expected: d,
                got: start.len(),
            });
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(MediumError::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        config.validate(dynamics.bound())?;
        let aux = (delta > 0.0).then(|| GaussianStream::new(config.seed, config.path_index | AUX_STREAM, 1));
        Ok(Self {
            dynamics,
            dt: config.dt,
            sqrt_dt: config.dt.sqrt(),
            sqrt_delta: delta.sqrt(),
            noise: GaussianStream::new(config.seed, config.path_index, d),
            aux,
            x: start.to_vec(),
            aux_sum: 0.0,
            step: 0,
            scratch: PointSample::new(d),
            b: vec![0.0; d],
            sigma: vec![0.0; d * d],
            xi: vec![0.0; d],
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// Current value of the time coordinate.
    pub fn time(&self) -> f64 {
        let t = self.step as f64 * self.dt;
        if self.aux.is_some() {
            t + self.sqrt_delta * self.sqrt_dt * self.aux_sum
        } else {
            t
        }
    }

    /// Coefficients evaluated at the current state, as used by the last or
    /// next step.
    pub fn sample(&self) -> &PointSample {
        &self.scratch
    }

    pub fn step(&mut self) -> Result<(), MediumError> {
        let d = self.x.len();
        let t = self.time();
        self.dynamics
            .coefficients(t, &self.x, &mut self.scratch, &mut self.b, &mut self.sigma)?;
        self.noise.fill(self.step, &mut self.xi);
        for i in 0..d {
            let mut dw = 0.0;
            for k in 0..d {
                dw += self.sigma[i * d + k] * self.xi[k];
            }
            self.x[i] += self.b[i] * self.dt + dw * self.sqrt_dt;
        }
        if let Some(aux) = self.aux.as_mut() {
            let mut z = [0.0];
            aux.fill(self.step, &mut z);
            self.aux_sum += z[0];
        }
        self.step += 1;
        Ok(())
    }

    /// Advance `n` steps.
    pub fn advance(&mut self, n: u64) -> Result<(), MediumError> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }
}
