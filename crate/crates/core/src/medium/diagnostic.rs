//! Media with closed-form homogenized limits, used as benchmarks.

use std::f64::consts::TAU;

use super::field::{CoefficientField, ControlConstants, Periodicity, PointSample};
use crate::linalg;
use crate::MediumError;

/// Constant σ and stream matrix H, V = 0, σ̃ = σ.
#[derive(Clone, Debug)]
pub struct ConstantMedium {
    dim: usize,
    sigma: Vec<f64>,
    a: Vec<f64>,
    h: Vec<f64>,
}

impl ConstantMedium {
    pub fn new(sigma: Vec<f64>, h: Option<Vec<f64>>) -> Result<Self, MediumError> {
        let dim = (sigma.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != sigma.len() || dim > crate::MAX_DIM {
            return Err(MediumError::InvalidParameter(format!(
                "sigma must be a square matrix of size <= {}, got {} entries",
                crate::MAX_DIM,
                sigma.len()
            )));
        }
        let h = h.unwrap_or_else(|| vec![0.0; dim * dim]);
        if h.len() != dim * dim {
            return Err(MediumError::DimensionMismatch {
                expected: dim * dim,
                got: h.len(),
            });
        }
        for i in 0..dim {
            for k in 0..dim {
                if (h[i * dim + k] + h[k * dim + i]).abs() > 1e-12 {
                    return Err(MediumError::InvalidParameter("stream matrix must be antisymmetric".into()));
                }
            }
        }
        let mut a = vec![0.0; dim * dim];
        linalg::gram(&sigma, dim, &mut a);
        Ok(Self { dim, sigma, a, h })
    }

    pub fn identity(dim: usize) -> Self {
        let mut sigma = vec![0.0; dim * dim];
        for i in 0..dim {
            sigma[i * dim + i] = 1.0;
        }
        Self::new(sigma, None).expect("identity is valid")
    }
}

impl CoefficientField for ConstantMedium {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bound(&self) -> f64 {
        linalg::max_abs(&self.sigma)
            .max(linalg::max_abs(&self.a))
            .max(linalg::max_abs(&self.h))
    }

    fn periodicity(&self) -> Periodicity {
        Periodicity::Periodic {
            time: TAU,
            space: vec![TAU; self.dim],
            time_dependent: false,
        }
    }

    fn control_constants(&self) -> ControlConstants {
        // ã = a; |H| ≤ C ã needs a nondegenerate a unless H = 0.
        let ev = linalg::sym_eigenvalues(&self.a, self.dim);
        let habs = linalg::matrix_abs(&self.h, self.dim);
        let hmax = linalg::sym_eigenvalues(&habs, self.dim).last().copied().unwrap_or(0.0);
        let c1_h = if hmax == 0.0 {
            0.0
        } else if ev[0] > 0.0 {
            hmax / ev[0]
        } else {
            f64::INFINITY
        };
        ControlConstants {
            m: 1.0,
            big_m: 1.0,
            c1_h,
            c2_h: 0.0,
            c2_a: 0.0,
        }
    }

    fn sample(&self, _t: f64, _x: &[f64], out: &mut PointSample) -> Result<(), MediumError> {
        out.clear();
        out.sigma.copy_from_slice(&self.sigma);
        out.sigma_tilde.copy_from_slice(&self.sigma);
        out.a.copy_from_slice(&self.a);
        out.a_tilde.copy_from_slice(&self.a);
        out.h.copy_from_slice(&self.h);
        Ok(())
    }

    fn name(&self) -> String {
        format!("constant(d={})", self.dim)
    }
}

/// One-dimensional layered medium on `[0, 2π)`:
/// `a(x) = mean + amplitude·sin x`, `V(x) = potential·cos x`, σ̃ = σ = √a.
#[derive(Clone, Debug)]
pub struct LayeredMedium {
    mean: f64,
    amplitude: f64,
    potential: f64,
}

impl LayeredMedium {
    pub fn new(mean: f64, amplitude: f64, potential: f64) -> Result<Self, MediumError> {
        if !(mean > amplitude.abs()) {
            return Err(MediumError::InvalidParameter(format!(
                "layered medium needs mean > |amplitude|, got {mean} and {amplitude}"
            )));
        }
        if !potential.is_finite() {
            return Err(MediumError::InvalidParameter("potential amplitude must be finite".into()));
        }
        Ok(Self {
            mean,
            amplitude,
            potential,
        })
    }

    pub fn diffusivity(&self, x: f64) -> f64 {
        self.mean + self.amplitude * x.sin()
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.potential * x.cos()
    }
}

impl CoefficientField for LayeredMedium {
    fn dim(&self) -> usize {
        1
    }

    fn bound(&self) -> f64 {
        let amax = self.mean + self.amplitude.abs();
        let bmax = 0.5 * self.amplitude.abs() + amax * self.potential.abs();
        amax.max(bmax).max(self.potential.abs())
    }

    fn periodicity(&self) -> Periodicity {
        Periodicity::Periodic {
            time: TAU,
            space: vec![TAU],
            time_dependent: false,
        }
    }

    fn control_constants(&self) -> ControlConstants {
        ControlConstants {
            m: 1.0,
            big_m: 1.0,
            c1_h: 0.0,
            c2_h: 0.0,
            c2_a: 0.0,
        }
    }

    fn sample(&self, _t: f64, x: &[f64], out: &mut PointSample) -> Result<(), MediumError> {
        let (s, c) = x[0].sin_cos();
        let a = self.mean + self.amplitude * s;
        let sig = a.sqrt();
        out.sigma[0] = sig;
        out.sigma_tilde[0] = sig;
        out.a[0] = a;
        out.a_tilde[0] = a;
        out.h[0] = 0.0;
        out.v = self.potential * c;
        out.dv[0] = -self.potential * s;
        out.da[0] = self.amplitude * c;
        out.da_tilde[0] = self.amplitude * c;
        out.dh[0] = 0.0;
        out.dt_a[0] = 0.0;
        out.dt_h[0] = 0.0;
        Ok(())
    }

    fn name(&self) -> String {
        format!(
            "layered(a={}+{}sin x, V={}cos x)",
            self.mean, self.amplitude, self.potential
        )
    }
}
