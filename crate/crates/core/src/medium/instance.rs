use std::sync::Arc;

use super::drift::{control_drift, drift};
use super::field::{CoefficientField, PointSample};
use crate::{MediumError, MAX_DIM};

/// One realization ω of a medium together with the origin of the shift
/// `τ_{t0,x0}`. Evaluating at `(t, x)` reads the underlying field at
/// `(t + t0, x + x0)`.
#[derive(Clone, Debug)]
pub struct MediumInstance {
    field: Arc<dyn CoefficientField>,
    origin_t: f64,
    origin_x: [f64; MAX_DIM],
}

impl MediumInstance {
    pub fn new(field: Arc<dyn CoefficientField>) -> Self {
        assert!(field.dim() <= MAX_DIM, "dimension {} > {MAX_DIM}", field.dim());
        Self {
            field,
            origin_t: 0.0,
            origin_x: [0.0; MAX_DIM],
        }
    }

    pub fn field(&self) -> &Arc<dyn CoefficientField> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn origin(&self) -> (f64, &[f64]) {
        (self.origin_t, &self.origin_x[..self.dim()])
    }

    pub fn id(&self) -> String {
        self.field.name()
    }

    /// `τ_{s,y}` applied to this instance.
    pub fn shifted(&self, s: f64, y: &[f64]) -> Self {
        let mut out = self.clone();
        out.origin_t += s;
        for (o, v) in out.origin_x.iter_mut().zip(y) {
            *o += v;
        }
        out
    }

    /// Absolute field coordinates of the instance point `(t, x)`.
    #[inline]
    pub fn absolute(&self, t: f64, x: &[f64]) -> (f64, [f64; MAX_DIM]) {
        let mut abs = [0.0; MAX_DIM];
        for j in 0..self.dim() {
            abs[j] = x[j] + self.origin_x[j];
        }
        (t + self.origin_t, abs)
    }

    pub fn sample(&self, t: f64, x: &[f64], out: &mut PointSample) -> Result<(), MediumError> {
        let d = self.dim();
        if x.len() != d {
            return Err(MediumError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let (ta, xa) = self.absolute(t, x);
        self.field.sample(ta, &xa[..d], out)
    }

    pub fn sample_new(&self, t: f64, x: &[f64]) -> Result<PointSample, MediumError> {
        let mut s = PointSample::new(self.dim());
        self.sample(t, x, &mut s)?;
        Ok(s)
    }

    pub fn sigma(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, MediumError> {
        Ok(self.sample_new(t, x)?.sigma)
    }

    /// σ̃ does not depend on time; it is evaluated at the instance time origin.
    pub fn sigma_tilde(&self, x: &[f64]) -> Result<Vec<f64>, MediumError> {
        Ok(self.sample_new(0.0, x)?.sigma_tilde)
    }

    pub fn potential(&self, x: &[f64]) -> Result<f64, MediumError> {
        Ok(self.sample_new(0.0, x)?.v)
    }

    pub fn stream_matrix(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, MediumError> {
        Ok(self.sample_new(t, x)?.h)
    }

    pub fn drift(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, MediumError> {
        let s = self.sample_new(t, x)?;
        let mut b = vec![0.0; self.dim()];
        drift(&s, &mut b);
        Ok(b)
    }

    pub fn control_drift(&self, x: &[f64]) -> Result<Vec<f64>, MediumError> {
        let s = self.sample_new(0.0, x)?;
        let mut b = vec![0.0; self.dim()];
        control_drift(&s, &mut b);
        Ok(b)
    }
}
