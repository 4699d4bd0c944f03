//! Numerical homogenization of degenerate diffusions in time-dependent
//! periodic and random media.
//!
//! The crate is organised around four layers:
//!
//! * [`medium`] builds coefficient fields (σ, σ̃, a, ã, V, H and their
//!   derivatives), the drift of the diffusion and the control-constant
//!   validator.
//! * [`sde`] integrates the diffusion, its control diffusion and the
//!   time-augmented diffusion with Euler–Maruyama on counter-based noise.
//! * [`corrector`] discretizes the resolvent equation
//!   `λu − (L + D_t)u = b_i` on a periodic space-time cell and assembles the
//!   effective matrix from the corrector gradients.
//! * [`montecarlo`] runs path ensembles and estimates the effective matrix,
//!   ergodic averages and Gaussianity diagnostics.

pub mod corrector;
pub mod effective;
pub mod error;
pub mod json;
pub mod linalg;
pub mod medium;
pub mod montecarlo;
pub mod rng;
pub mod sde;

pub use error::{CorrectorError, EstimateError, MediumError};

/// Largest spatial dimension supported by the fixed-size scratch buffers.
pub const MAX_DIM: usize = 4;
