use crate::medium::{control_drift, drift, MediumInstance, PointSample};
use crate::MediumError;

/// Coefficients `(b, σ)` of an SDE `dX = b dt + σ dB` with `σ` square.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;

    fn bound(&self) -> f64;

    fn coefficients(
        &self,
        t: f64,
        x: &[f64],
        scratch: &mut PointSample,
        drift: &mut [f64],
        sigma: &mut [f64],
    ) -> Result<(), MediumError>;
}

/// `(b, σ)` of the medium.
pub struct FullDynamics<'a> {
    medium: &'a MediumInstance,
}

impl<'a> FullDynamics<'a> {
    pub fn new(medium: &'a MediumInstance) -> Self {
        Self { medium }
    }
}

impl Dynamics for FullDynamics<'_> {
    fn dim(&self) -> usize {
        self.medium.dim()
    }

    fn bound(&self) -> f64 {
        self.medium.field().bound()
    }

    fn coefficients(
        &self,
        t: f64,
        x: &[f64],
        scratch: &mut PointSample,
        b: &mut [f64],
        sigma: &mut [f64],
    ) -> Result<(), MediumError> {
        self.medium.sample(t, x, scratch)?;
        drift(scratch, b);
        sigma.copy_from_slice(&scratch.sigma);
        Ok(())
    }
}

/// `(b̃, σ̃)` of the medium; the time argument is ignored.
pub struct ControlDynamics<'a> {
    medium: &'a MediumInstance,
}

impl<'a> ControlDynamics<'a> {
    pub fn new(medium: &'a MediumInstance) -> Self {
        Self { medium }
    }
}

impl Dynamics for ControlDynamics<'_> {
    fn dim(&self) -> usize {
        self.medium.dim()
    }

    fn bound(&self) -> f64 {
        self.medium.field().bound()
    }

    fn coefficients(
        &self,
        _t: f64,
        x: &[f64],
        scratch: &mut PointSample,
        b: &mut [f64],
        sigma: &mut [f64],
    ) -> Result<(), MediumError> {
        self.medium.sample(0.0, x, scratch)?;
        control_drift(scratch, b);
        sigma.copy_from_slice(&scratch.sigma_tilde);
        Ok(())
    }
}

/// `b = c`, `σ = 0`.
pub struct ConstantDrift {
    pub c: Vec<f64>,
}

impl Dynamics for ConstantDrift {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn bound(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn coefficients(
        &self,
        _t: f64,
        _x: &[f64],
        _scratch: &mut PointSample,
        b: &mut [f64],
        sigma: &mut [f64],
    ) -> Result<(), MediumError> {
        b.copy_from_slice(&self.c);
        sigma.fill(0.0);
        Ok(())
    }
}
