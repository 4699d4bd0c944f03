use std::fmt;

use serde::{Deserialize, Serialize};

use crate::MediumError;

/// Everything a coefficient field knows about one space-time point.
///
/// Matrices are row-major `d × d`. Spatial derivative tensors are laid out
/// as `[j][i][k] = D_j m_ik`, i.e. index `j * d * d + i * d + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample {
    pub dim: usize,
    pub sigma: Vec<f64>,
    pub sigma_tilde: Vec<f64>,
    pub a: Vec<f64>,
    pub a_tilde: Vec<f64>,
    pub h: Vec<f64>,
    pub v: f64,
    pub dv: Vec<f64>,
    pub da: Vec<f64>,
    pub da_tilde: Vec<f64>,
    pub dh: Vec<f64>,
    pub dt_a: Vec<f64>,
    pub dt_h: Vec<f64>,
}

impl PointSample {
    pub fn new(dim: usize) -> Self {
        let m = dim * dim;
        Self {
            dim,
            sigma: vec![0.0; m],
            sigma_tilde: vec![0.0; m],
            a: vec![0.0; m],
            a_tilde: vec![0.0; m],
            h: vec![0.0; m],
            v: 0.0,
            dv: vec![0.0; dim],
            da: vec![0.0; m * dim],
            da_tilde: vec![0.0; m * dim],
            dh: vec![0.0; m * dim],
            dt_a: vec![0.0; m],
            dt_h: vec![0.0; m],
        }
    }

    pub fn clear(&mut self) {
        for buf in [
            &mut self.sigma,
            &mut self.sigma_tilde,
            &mut self.a,
            &mut self.a_tilde,
            &mut self.h,
            &mut self.dv,
            &mut self.da,
            &mut self.da_tilde,
            &mut self.dh,
            &mut self.dt_a,
            &mut self.dt_h,
        ] {
            buf.iter_mut().for_each(|x| *x = 0.0);
        }
        self.v = 0.0;
    }

    /// `D_j m_ik` from a derivative tensor.
    #[inline]
    pub fn deriv(tensor: &[f64], d: usize, j: usize, i: usize, k: usize) -> f64 {
        tensor[j * d * d + i * d + k]
    }
}

/// Spatial and temporal periodicity of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Periodicity {
    /// Periodic cell `[0, time) × Π [0, space_j)`. Time-independent fields
    /// still carry a nominal time period.
    Periodic {
        time: f64,
        space: Vec<f64>,
        time_dependent: bool,
    },
    /// A genuinely random, stationary field; no finite cell.
    StationaryRandom,
}

/// Constants of the two-sided control of `a`, `H`, `D_t H`, `D_t a` by `ã`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlConstants {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub c1_h: f64,
    pub c2_h: f64,
    pub c2_a: f64,
}

impl ControlConstants {
    pub fn new(m: f64, big_m: f64, c1_h: f64, c2_h: f64, c2_a: f64) -> Result<Self, MediumError> {
        let all = [m, big_m, c1_h, c2_h, c2_a];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(MediumError::InvalidParameter(format!(
                "control constants must be finite and nonnegative: {all:?}"
            )));
        }
        if m <= 0.0 || m > big_m {
            return Err(MediumError::InvalidParameter(format!(
                "control constants need 0 < m <= M, got m={m}, M={big_m}"
            )));
        }
        Ok(Self {
            m,
            big_m,
            c1_h,
            c2_h,
            c2_a,
        })
    }
}

/// A space-time coefficient field `(t, x) ↦ (σ, σ̃, a, ã, V, H, …)`.
///
/// Implementations are immutable and evaluate deterministically.
pub trait CoefficientField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Uniform bound `K` on σ, a, b, σ̃, V and H.
    fn bound(&self) -> f64;

    fn periodicity(&self) -> Periodicity;

    /// Constants for which the field satisfies the control assumption.
    fn control_constants(&self) -> ControlConstants;

    /// Fill `out` with all coefficients and first derivatives at `(t, x)`.
    fn sample(&self, t: f64, x: &[f64], out: &mut PointSample) -> Result<(), MediumError>;

    /// Short human-readable identifier.
    fn name(&self) -> String;
}
