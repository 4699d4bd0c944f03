use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::medium::{MediumInstance, Periodicity, PointSample};
use crate::sde::{FullDynamics, Observable, SdeConfig, Stepper};
use crate::{EstimateError, MediumError};

use super::ensemble::{check_failures, draw_media, path_instance};
use super::spec::{noise_seed, InitialDistribution, MediumFamily};
use super::stats::{batch_means, loglog_fit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicSpec {
    pub n_paths: usize,
    #[serde(default = "one")]
    pub n_media: usize,
    pub master_seed: u64,
    pub dt: f64,
    /// Increasing averaging horizons `t`.
    pub times: Vec<f64>,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Use this value of π(f) instead of computing it.
    #[serde(default)]
    pub reference: Option<f64>,
}

fn one() -> usize {
    1
}

fn default_batches() -> usize {
    20
}

/// `E_π|t⁻¹∫₀ᵗ f(Y_r) dr − π(f)|` over the horizons of the spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicCurve {
    pub reference: f64,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub ci: Vec<f64>,
    pub mean_average: Vec<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// `errors.last() / |π(f)|`.
    pub final_relative_error: f64,
    /// Each error is at most the previous one plus its half-width.
    pub decreasing: bool,
}

const QUADRATURE_POINTS: f64 = 1_048_576.0;
const RANDOM_BOX: f64 = 64.0;
const RANDOM_MEDIA: usize = 8;

/// `π(f)` for a periodic medium by the midpoint rule on the space-time
/// cell with weights `e^{−2V}`.
pub fn periodic_mean(medium: &MediumInstance, f: &dyn Observable) -> Result<f64, MediumError> {
    let Periodicity::Periodic {
        time,
        space,
        time_dependent,
    } = medium.field().periodicity()
    else {
        return Err(MediumError::InvalidParameter("periodic_mean needs a periodic medium".into()));
    };
    let d = space.len();
    let axes = d + usize::from(time_dependent);
    let res = (QUADRATURE_POINTS.powf(1.0 / axes as f64).floor() as usize).clamp(2, 512);
    box_mean(medium, f, &space, time_dependent.then_some(time), res)
}

fn box_mean(
    medium: &MediumInstance,
    f: &dyn Observable,
    space: &[f64],
    time: Option<f64>,
    res: usize,
) -> Result<f64, MediumError> {
    let d = space.len();
    let nt = if time.is_some() { res } else { 1 };
    let slice = res.pow(d as u32);
    let partial: Vec<Result<(f64, f64), MediumError>> = (0..nt)
        .into_par_iter()
        .map(|it| {
            let t = time.map_or(0.0, |p| (it as f64 + 0.5) * p / res as f64);
            let mut s = PointSample::new(d);
            let mut x = vec![0.0; d];
            let (mut num, mut den) = (0.0, 0.0);
            for lin in 0..slice {
                let mut r = lin;
                for j in (0..d).rev() {
                    x[j] = ((r % res) as f64 + 0.5) * space[j] / res as f64;
                    r /= res;
                }
                medium.sample(t, &x, &mut s)?;
                let w = (-2.0 * s.v).exp();
                let (ta, xa) = medium.absolute(t, &x);
                num += w * f.eval(&s, ta, &xa[..d]);
                den += w;
            }
            Ok((num, den))
        })
        .collect();
    let (mut num, mut den) = (0.0, 0.0);
    for p in partial {
        let (a, b) = p?;
        num += a;
        den += b;
    }
    Ok(num / den)
}

/// `π(f)` for the family: cell quadrature for periodic media, otherwise
/// the average over boxes of side 64 in several independent media.
pub fn stationary_mean(family: &MediumFamily, f: &dyn Observable, master_seed: u64) -> Result<f64, EstimateError> {
    if !family.is_random() {
        return Ok(periodic_mean(&family.draw(master_seed, 0)?, f)?);
    }
    let d = family.dim();
    let res = (QUADRATURE_POINTS.powf(1.0 / (d + 1) as f64).floor() as usize).clamp(2, 128);
    let space = vec![RANDOM_BOX; d];
    let mut acc = 0.0;
    for m in 0..RANDOM_MEDIA {
        let inst = family.draw(master_seed ^ 0x5eed, m)?;
        let centred = inst.shifted(0.0, &vec![-RANDOM_BOX / 2.0; d]);
        acc += box_mean(&centred, f, &space, Some(RANDOM_BOX), res)?;
    }
    Ok(acc / RANDOM_MEDIA as f64)
}

/// Time averages `t⁻¹∫₀ᵗ f(Y_r) dr` (left-point rule) of one path at each
/// horizon step.
fn path_averages(
    inst: &MediumInstance,
    f: &dyn Observable,
    cfg: &SdeConfig,
    steps: &[u64],
) -> Result<Vec<f64>, MediumError> {
    let d = inst.dim();
    let dynamics = FullDynamics::new(inst);
    let mut st = Stepper::new(&dynamics, cfg, &vec![0.0; d], 0.0)?;
    let mut x = [0.0; crate::MAX_DIM];
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(steps.len());
    for &n in steps {
        while st.step_index() < n {
            let t = st.time();
            x[..d].copy_from_slice(st.state());
            st.step()?;
            let (ta, xa) = inst.absolute(t, &x[..d]);
            sum += f.eval(st.sample(), ta, &xa[..d]);
        }
        if !sum.is_finite() {
            return Err(MediumError::InvalidParameter("time average diverged".into()));
        }
        out.push(sum / n as f64);
    }
    Ok(out)
}

/// Error curve of the ergodic theorem started from π.
pub fn ergodic_average(family: &MediumFamily, f: &dyn Observable, spec: &ErgodicSpec) -> Result<ErgodicCurve, EstimateError> {
    let total = spec.n_paths * spec.n_media;
    if total == 0 || !(spec.dt > 0.0) {
        return Err(EstimateError::InvalidSpec("ergodic spec needs paths and a positive dt".into()));
    }
    if spec.batches < 2 || spec.batches > total {
        return Err(EstimateError::InvalidSpec(format!("batches must lie in [2, {total}]")));
    }
    if spec.times.is_empty() || spec.times.iter().any(|t| !(*t >= spec.dt)) || spec.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EstimateError::InvalidSpec("times must be increasing and >= dt".into()));
    }
    let steps: Vec<u64> = spec.times.iter().map(|t| (t / spec.dt).round() as u64).collect();
    let reference = match spec.reference {
        Some(r) => r,
        None => stationary_mean(family, f, spec.master_seed)?,
    };
    let media = draw_media(family, spec.master_seed, spec.n_media)?;
    let horizon = *steps.last().unwrap() as f64 * spec.dt;
    let results: Vec<Result<Vec<f64>, MediumError>> = (0..total)
        .into_par_iter()
        .map(|g| {
            let m = g / spec.n_paths;
            let inst = path_instance(&media[m].0, media[m].1, InitialDistribution::Pi, spec.master_seed, g as u64)?;
            let cfg = SdeConfig::new(spec.dt, horizon, noise_seed(spec.master_seed, m)).with_path(g as u64);
            path_averages(&inst, f, &cfg, &steps)
        })
        .collect();
    check_failures(&results)?;
    let avgs: Vec<Vec<f64>> = results.into_iter().filter_map(Result::ok).collect();
    let k = steps.len();
    let (m, h) = batch_means(avgs.len(), 2 * k, spec.batches, |p, out| {
        for i in 0..k {
            out[i] += (avgs[p][i] - reference).abs();
            out[k + i] += avgs[p][i];
        }
    });
    let times: Vec<f64> = steps.iter().map(|&n| n as f64 * spec.dt).collect();
    let errors = m[..k].to_vec();
    let fit = loglog_fit(&times, &errors);
    let last = *errors.last().unwrap();
    Ok(ErgodicCurve {
        reference,
        decreasing: (1..k).all(|i| errors[i] <= errors[i - 1] + h[i]),
        final_relative_error: if reference == 0.0 { last } else { last / reference.abs() },
        times,
        errors,
        ci: h[..k].to_vec(),
        mean_average: m[k..].to_vec(),
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
    })
}
