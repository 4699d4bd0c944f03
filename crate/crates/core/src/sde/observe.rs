use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::medium::{MediumInstance, PointSample};
use crate::MediumError;

/// A function of the environment `τ_{t,x} ω`, read through the sampled
/// coefficients at `(t, x)`.
pub trait Observable: Sync {
    fn eval(&self, sample: &PointSample, t: f64, x: &[f64]) -> f64;
}

/// Observables that can be named in configuration files. Positions are in
/// absolute medium coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedObservable {
    Constant { value: f64 },
    Potential,
    /// `a_ij` with 1-based indices.
    A { i: usize, j: usize },
    /// `sin(x_i)` with a 1-based index.
    Sin { i: usize },
}

impl Observable for NamedObservable {
    fn eval(&self, s: &PointSample, _t: f64, x: &[f64]) -> f64 {
        match *self {
            NamedObservable::Constant { value } => value,
            NamedObservable::Potential => s.v,
            NamedObservable::A { i, j } => s.a[(i - 1) * s.dim + (j - 1)],
            NamedObservable::Sin { i } => x[i - 1].sin(),
        }
    }
}

impl NamedObservable {
    pub fn check(&self, dim: usize) -> Result<(), MediumError> {
        let ok = match *self {
            NamedObservable::A { i, j } => (1..=dim).contains(&i) && (1..=dim).contains(&j),
            NamedObservable::Sin { i } => (1..=dim).contains(&i),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(MediumError::InvalidParameter(format!("observable {self:?} needs indices in 1..={dim}")))
        }
    }
}

/// `f(Y_{t_n}) = f(τ_{t_n, X_{t_n}} ω)` along the recorded nodes.
pub fn observe_environment(
    medium: &MediumInstance,
    traj: &Trajectory,
    f: &dyn Observable,
) -> Result<Vec<f64>, MediumError> {
    let d = medium.dim();
    let mut s = PointSample::new(d);
    (0..traj.len())
        .map(|n| {
            let t = if traj.augmented { traj.state(n)[0] } else { traj.times[n] };
            let x = traj.position(n);
            medium.sample(t, x, &mut s)?;
            let (ta, xa) = medium.absolute(t, x);
            Ok(f.eval(&s, ta, &xa[..d]))
        })
        .collect()
}
