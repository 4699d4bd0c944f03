use serde::{Deserialize, Serialize};

use crate::effective::{EffectiveDiffusivity, Provenance};
use crate::EstimateError;

use super::ensemble::{run_ensemble, Ensemble};
use super::spec::{EnsembleSpec, MediumFamily};
use super::stats::batch_means;

/// `E[Z_t Z_tᵀ]` at one observation time with batch-means half-widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub time: f64,
    pub matrix: Vec<f64>,
    pub ci: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub dim: usize,
    pub n_paths: usize,
    pub batches: usize,
    pub per_time: Vec<CovarianceEstimate>,
    /// `Â = mean_t E[Z_t Z_tᵀ]/t`.
    pub a_hat: Vec<f64>,
    pub ci: Vec<f64>,
}

impl McEstimate {
    pub fn effective(&self) -> EffectiveDiffusivity {
        EffectiveDiffusivity::new(self.dim, self.a_hat.clone(), self.ci.clone(), Provenance::MonteCarlo)
    }
}

/// `mean_k Z_{t_k} Z_{t_k}ᵀ / t_k` of one path, added into `out`.
pub(crate) fn path_diffusivity(ens: &Ensemble, p: usize, out: &mut [f64]) {
    let d = ens.dim;
    let nt = ens.times.len();
    for k in 0..nt {
        let z = ens.z(p, k);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += z[i] * z[j] / (ens.times[k] * nt as f64);
            }
        }
    }
}

/// Second moments of the ensemble. The mean is taken as zero rather than
/// estimated.
pub fn second_moments(ens: &Ensemble, batches: usize) -> Result<McEstimate, EstimateError> {
    let n = ens.n_paths();
    let d = ens.dim;
    let dd = d * d;
    if batches < 2 || n < batches {
        return Err(EstimateError::InvalidSpec(format!("{n} paths cannot form {batches} batches")));
    }
    let nt = ens.times.len();
    let (m, h) = batch_means(n, (nt + 1) * dd, batches, |p, out| {
        for k in 0..nt {
            let z = ens.z(p, k);
            for i in 0..d {
                for j in 0..d {
                    let v = z[i] * z[j];
                    out[k * dd + i * d + j] += v;
                    out[nt * dd + i * d + j] += v / (ens.times[k] * nt as f64);
                }
            }
        }
    });
    Ok(McEstimate {
        dim: d,
        n_paths: n,
        batches,
        per_time: (0..nt)
            .map(|k| CovarianceEstimate {
                time: ens.times[k],
                matrix: m[k * dd..(k + 1) * dd].to_vec(),
                ci: h[k * dd..(k + 1) * dd].to_vec(),
            })
            .collect(),
        a_hat: m[nt * dd..].to_vec(),
        ci: h[nt * dd..].to_vec(),
    })
}

/// Monte Carlo effective diffusivity from rescaled paths.
pub fn mc_diffusivity(family: &MediumFamily, spec: &EnsembleSpec) -> Result<(EffectiveDiffusivity, McEstimate, Ensemble), EstimateError> {
    let ens = run_ensemble(family, spec)?;
    let est = second_moments(&ens, spec.batches)?;
    Ok((est.effective(), est, ens))
}
