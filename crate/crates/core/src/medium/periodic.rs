//! The degenerate periodic medium on the torus `T³` (one time and two space
//! coordinates): `σ̃ = (1 − cos x)(1 − cos y) Id`, `σ = σ̃ U`, `V = H = 0`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::field::{CoefficientField, ControlConstants, Periodicity, PointSample};
use crate::linalg;
use crate::MediumError;

/// Smooth 2π-periodic matrix field `U(t, x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum UField {
    Identity,
    /// Rotation by the angle `amplitude · (sin t + sin(x + y))`; `U Uᵀ = Id`.
    Rotation { amplitude: f64 },
    /// `diag(1 + κ sin(t + x), 1 + κ cos(t − y))` with `0 ≤ κ < 1`.
    Stretch { amplitude: f64 },
}

/// `U` and its partial derivatives in `t`, `x`, `y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UJet {
    pub u: [f64; 4],
    pub dt: [f64; 4],
    pub dx: [f64; 4],
    pub dy: [f64; 4],
}

impl UField {
    pub fn jet(&self, t: f64, x: f64, y: f64) -> UJet {
        match *self {
            UField::Identity => UJet {
                u: [1.0, 0.0, 0.0, 1.0],
                ..UJet::default()
            },
            UField::Rotation { amplitude } => {
                let theta = amplitude * (t.sin() + (x + y).sin());
                let (s, c) = theta.sin_cos();
                let dtheta_dt = amplitude * t.cos();
                let dtheta_dxy = amplitude * (x + y).cos();
                let rot = [c, -s, s, c];
                let drot = [-s, -c, c, -s];
                let scale = |f: f64| drot.map(|v| v * f);
                UJet {
                    u: rot,
                    dt: scale(dtheta_dt),
                    dx: scale(dtheta_dxy),
                    dy: scale(dtheta_dxy),
                }
            }
            UField::Stretch { amplitude: k } => {
                let (s1, c1) = (t + x).sin_cos();
                let (s2, c2) = (t - y).sin_cos();
                UJet {
                    u: [1.0 + k * s1, 0.0, 0.0, 1.0 + k * c2],
                    dt: [k * c1, 0.0, 0.0, -k * s2],
                    dx: [k * c1, 0.0, 0.0, 0.0],
                    dy: [0.0, 0.0, 0.0, k * s2],
                }
            }
        }
    }

    pub fn time_dependent(&self) -> bool {
        match *self {
            UField::Identity => false,
            UField::Rotation { amplitude } | UField::Stretch { amplitude } => amplitude != 0.0,
        }
    }

    /// Bounds `(λ_min, λ_max)` of `U Uᵀ` over the torus.
    pub fn gram_bounds(&self) -> (f64, f64) {
        match *self {
            UField::Identity | UField::Rotation { .. } => (1.0, 1.0),
            UField::Stretch { amplitude: k } => ((1.0 - k.abs()).powi(2), (1.0 + k.abs()).powi(2)),
        }
    }

    fn derivative_bound(&self) -> f64 {
        match *self {
            UField::Identity => 0.0,
            UField::Rotation { amplitude } | UField::Stretch { amplitude } => 2.0 * amplitude.abs(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PeriodicMedium {
    alpha: f64,
    u: UField,
}

/// Build the periodic medium and check `α⁻¹ Id ≤ U Uᵀ ≤ α Id` on a
/// validation grid of the torus.
pub fn make_periodic_medium(alpha: f64, u: UField) -> Result<PeriodicMedium, MediumError> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(MediumError::InvalidParameter(format!(
            "alpha must be a finite real >= 1, got {alpha}"
        )));
    }
    if let UField::Stretch { amplitude } = u {
        if amplitude.abs() >= 1.0 {
            return Err(MediumError::InvalidParameter(format!(
                "stretch amplitude must lie in (-1, 1), got {amplitude}"
            )));
        }
    }
    const N: usize = 16;
    let mut gram = [0.0; 4];
    for it in 0..N {
        for ix in 0..N {
            for iy in 0..N {
                let p = [it, ix, iy].map(|k| TAU * k as f64 / N as f64);
                let jet = u.jet(p[0], p[1], p[2]);
                linalg::gram(&jet.u, 2, &mut gram);
                for ev in linalg::sym_eigenvalues(&gram, 2) {
                    if ev < 1.0 / alpha - 1e-12 || ev > alpha + 1e-12 {
                        return Err(MediumError::Ellipticity {
                            alpha,
                            eigenvalue: ev,
                            at: p,
                        });
                    }
                }
            }
        }
    }
    Ok(PeriodicMedium { alpha, u })
}

impl PeriodicMedium {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn u_field(&self) -> UField {
        self.u
    }
}

impl CoefficientField for PeriodicMedium {
    fn dim(&self) -> usize {
        2
    }

    fn bound(&self) -> f64 {
        let (_, gmax) = self.u.gram_bounds();
        let umax = gmax.sqrt();
        let du = self.u.derivative_bound();
        // |a| ≤ 16 |UUᵀ|, |b| ≤ ½(2·4·2·|UUᵀ| + 16·2|U||DU|) per entry and column
        let a_bound = 16.0 * gmax;
        let b_bound = 2.0 * (8.0 * gmax + 16.0 * umax * du);
        a_bound.max(b_bound).max(4.0 * umax)
    }

    fn periodicity(&self) -> Periodicity {
        Periodicity::Periodic {
            time: TAU,
            space: vec![TAU, TAU],
            time_dependent: self.u.time_dependent(),
        }
    }

    fn control_constants(&self) -> ControlConstants {
        let (gmin, gmax) = self.u.gram_bounds();
        let c2_a = match self.u {
            UField::Stretch { amplitude } => 2.0 * amplitude.abs() * (1.0 + amplitude.abs()),
            _ => 0.0,
        };
        ControlConstants {
            m: gmin,
            big_m: gmax,
            c1_h: 0.0,
            c2_h: 0.0,
            c2_a,
        }
    }

    fn sample(&self, t: f64, x: &[f64], out: &mut PointSample) -> Result<(), MediumError> {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        let s = (1.0 - cx) * (1.0 - cy);
        let ds = [sx * (1.0 - cy), (1.0 - cx) * sy];
        let jet = self.u.jet(t, x[0], x[1]);

        let mut p = [0.0; 4];
        linalg::gram(&jet.u, 2, &mut p);
        let mut dp = [[0.0; 4]; 2];
        linalg::sym_product_derivative(&jet.dx, &jet.u, 2, &mut dp[0]);
        linalg::sym_product_derivative(&jet.dy, &jet.u, 2, &mut dp[1]);
        let mut dtp = [0.0; 4];
        linalg::sym_product_derivative(&jet.dt, &jet.u, 2, &mut dtp);

        let s2 = s * s;
        for k in 0..4 {
            out.sigma[k] = s * jet.u[k];
            out.a[k] = s2 * p[k];
            out.h[k] = 0.0;
            out.dt_a[k] = s2 * dtp[k];
            out.dt_h[k] = 0.0;
        }
        out.sigma_tilde.copy_from_slice(&[s, 0.0, 0.0, s]);
        out.a_tilde.copy_from_slice(&[s2, 0.0, 0.0, s2]);
        out.v = 0.0;
        out.dv.fill(0.0);
        out.dh.fill(0.0);
        for j in 0..2 {
            for k in 0..4 {
                out.da[j * 4 + k] = 2.0 * s * ds[j] * p[k] + s2 * dp[j][k];
            }
            let g = 2.0 * s * ds[j];
            out.da_tilde[j * 4..j * 4 + 4].copy_from_slice(&[g, 0.0, 0.0, g]);
        }
        Ok(())
    }

    fn name(&self) -> String {
        match self.u {
            UField::Identity => "periodic(U=identity)".into(),
            UField::Rotation { amplitude } => format!("periodic(U=rotation {amplitude})"),
            UField::Stretch { amplitude } => format!("periodic(U=stretch {amplitude})"),
        }
    }
}
