//! Path ensembles: Monte Carlo effective diffusivity, ergodic averages and
//! Brownian-limit diagnostics.

mod diagnostics;
mod dispersion;
mod ensemble;
mod ergodic;
mod estimate;
mod spec;
pub mod stats;

pub use diagnostics::{
    gaussianity_diagnostics, CrossCovariance, DiagnosticFlags, DiagnosticsReport, Reference, DECORRELATION_FACTOR,
    KURTOSIS_THRESHOLD,
};
pub use dispersion::{dispersion_study, DispersionPoint, DispersionReport};
pub use ensemble::{run_ensemble, Ensemble};
pub use ergodic::{ergodic_average, periodic_mean, stationary_mean, ErgodicCurve, ErgodicSpec};
pub use estimate::{mc_diffusivity, second_moments, CovarianceEstimate, McEstimate};
pub use spec::{noise_seed, potential_floor, sample_initial_shift, EnsembleSpec, InitialDistribution, MediumFamily};
