//! Euler–Maruyama integration of the diffusion, the control diffusion and
//! the time-augmented diffusion, plus rescaling and environment observation.

mod config;
mod dynamics;
mod observe;
mod stepper;
mod trajectory;

pub use config::{default_dt, Scheme, SdeConfig};
pub use dynamics::{ConstantDrift, ControlDynamics, Dynamics, FullDynamics};
pub use observe::{observe_environment, NamedObservable, Observable};
pub use stepper::Stepper;
pub use trajectory::{rescale, Trajectory};

use crate::medium::MediumInstance;
use crate::MediumError;

/// Integrate `dynamics` from `start` over `[0, config.horizon]`.
pub fn integrate<D: Dynamics + ?Sized>(
    dynamics: &D,
    config: &SdeConfig,
    start: &[f64],
    delta: Option<f64>,
    medium_id: String,
) -> Result<Trajectory, MediumError> {
    let mut stepper = Stepper::new(dynamics, config, start, delta.unwrap_or(0.0))?;
    let augmented = delta.is_some();
    let dim = start.len() + usize::from(augmented);
    let mut traj = Trajectory::new(dim, config.dt * config.record_every as f64, medium_id, config, augmented);
    let mut buf = vec![0.0; dim];
    let mut push = |s: &Stepper<D>, traj: &mut Trajectory| {
        if augmented {
            buf[0] = s.time();
            buf[1..].copy_from_slice(s.state());
        } else {
            buf.copy_from_slice(s.state());
        }
        traj.push(s.step_index(), s.step_index() as f64 * config.dt, &buf);
    };
    push(&stepper, &mut traj);
    let n = config.n_steps();
    while stepper.step_index() < n {
        stepper.step()?;
        if stepper.step_index() % config.record_every as u64 == 0 {
            push(&stepper, &mut traj);
        }
    }
    Ok(traj)
}

/// The diffusion `dX = b dt + σ dB`.
pub fn simulate(medium: &MediumInstance, config: &SdeConfig, start: &[f64]) -> Result<Trajectory, MediumError> {
    integrate(&FullDynamics::new(medium), config, start, None, medium.id())
}

/// The control diffusion `dX̃ = b̃ dt + σ̃ dB`.
pub fn simulate_control(
    medium: &MediumInstance,
    config: &SdeConfig,
    start: &[f64],
) -> Result<Trajectory, MediumError> {
    integrate(&ControlDynamics::new(medium), config, start, None, medium.id())
}

/// The `d + 1`-dimensional diffusion whose first coordinate is time with
/// an extra `√δ dB′`. States are `(time, x₁, …, x_d)`.
pub fn simulate_delta(
    medium: &MediumInstance,
    config: &SdeConfig,
    delta: f64,
    start: &[f64],
) -> Result<Trajectory, MediumError> {
    integrate(&FullDynamics::new(medium), config, start, Some(delta), medium.id())
}
