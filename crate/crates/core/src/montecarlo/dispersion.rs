use serde::{Deserialize, Serialize};

use crate::EstimateError;

use super::ensemble::{run_ensemble, Ensemble};
use super::estimate::{path_diffusivity, second_moments};
use super::spec::{EnsembleSpec, MediumFamily};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub epsilon: f64,
    /// Pooled `Â`.
    pub a_hat: Vec<f64>,
    /// `Â` of each medium realization.
    pub per_medium: Vec<Vec<f64>>,
    /// `√(between-medium variance)/|Â|`, Frobenius.
    pub raw_dispersion: f64,
    /// Same with the expected path-sampling variance removed; estimates the
    /// spread due to ω alone.
    pub dispersion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub points: Vec<DispersionPoint>,
    /// `dispersion` strictly decreases as ε decreases.
    pub decreasing: bool,
}

/// Between-medium and mean within-medium variance of the per-path
/// diffusivity, summed over entries.
fn variance_components(ens: &Ensemble, n_media: usize) -> (Vec<Vec<f64>>, f64, f64) {
    let dd = ens.dim * ens.dim;
    let mut groups: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_media];
    for p in 0..ens.n_paths() {
        let mut q = vec![0.0; dd];
        path_diffusivity(ens, p, &mut q);
        groups[ens.medium_index[p]].push(q);
    }
    let means: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| (0..dd).map(|k| g.iter().map(|q| q[k]).sum::<f64>() / g.len().max(1) as f64).collect())
        .collect();
    let grand: Vec<f64> = (0..dd)
        .map(|k| means.iter().map(|m| m[k]).sum::<f64>() / n_media as f64)
        .collect();
    let between = means
        .iter()
        .map(|m| (0..dd).map(|k| (m[k] - grand[k]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / (n_media - 1) as f64;
    let sampling = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| {
            let n = g.len() as f64;
            if n < 2.0 {
                return 0.0;
            }
            let var = g
                .iter()
                .map(|q| (0..dd).map(|k| (q[k] - m[k]).powi(2)).sum::<f64>())
                .sum::<f64>()
                / (n - 1.0);
            var / n
        })
        .sum::<f64>()
        / n_media as f64;
    (means, between, sampling)
}

/// Inter-medium spread of `Â` for each ε (largest first). Every medium
/// contributes `spec.n_paths` paths.
pub fn dispersion_study(family: &MediumFamily, spec: &EnsembleSpec, epsilons: &[f64]) -> Result<DispersionReport, EstimateError> {
    if spec.n_media < 2 || spec.n_paths < 2 {
        return Err(EstimateError::InvalidSpec("dispersion needs n_media >= 2 and n_paths >= 2".into()));
    }
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut points = Vec::with_capacity(eps.len());
    for &e in &eps {
        let mut s = spec.clone();
        s.epsilon = e;
        let ens = run_ensemble(family, &s)?;
        let pooled = second_moments(&ens, s.batches)?;
        let (per_medium, between, sampling) = variance_components(&ens, s.n_media);
        let norm = pooled.a_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = |v: f64| if norm > 0.0 { v.max(0.0).sqrt() / norm } else { 0.0 };
        points.push(DispersionPoint {
            epsilon: e,
            a_hat: pooled.a_hat,
            per_medium,
            raw_dispersion: rel(between),
            dispersion: rel(between - sampling),
        });
    }
    let decreasing = points
        .windows(2)
        .all(|w| w[1].dispersion < w[0].dispersion || w[1].dispersion == 0.0);
    Ok(DispersionReport { points, decreasing })
}
