use serde::{Deserialize, Serialize};

use crate::EstimateError;

use super::ensemble::Ensemble;
use super::ergodic::ErgodicCurve;
use super::estimate::{second_moments, CovarianceEstimate};
use super::stats::{batch_means, excess_kurtosis};

/// Largest admissible per-component |excess kurtosis|.
pub const KURTOSIS_THRESHOLD: f64 = 0.2;

/// Increment correlations across disjoint time intervals must stay below
/// `DECORRELATION_FACTOR / √N`.
pub const DECORRELATION_FACTOR: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCovariance {
    pub s: f64,
    pub t: f64,
    /// `E[Z_s Z_tᵀ]`.
    pub matrix: Vec<f64>,
    pub ci: Vec<f64>,
    /// `min(s, t)·A` for the reference `A`.
    pub expected: Vec<f64>,
    pub tolerance: Vec<f64>,
    pub within: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticFlags {
    pub kurtosis: bool,
    pub cross_covariance: bool,
    pub decorrelation: bool,
    pub gaussian: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n_paths: usize,
    pub covariances: Vec<CovarianceEstimate>,
    /// Per component at the last observation time; `None` for a degenerate
    /// (zero-spread) sample.
    pub excess_kurtosis: Vec<Option<f64>>,
    pub kurtosis_threshold: f64,
    pub cross_covariance: CrossCovariance,
    /// Correlation matrix of the increments `Z_{t_k} − Z_{t_{k−1}}`, flattened
    /// with index `k·d + j`.
    pub increment_correlation: Vec<Vec<f64>>,
    pub decorrelation_threshold: f64,
    pub ergodic: Option<ErgodicCurve>,
    pub flags: DiagnosticFlags,
}

/// Reference matrix against which `Cov(Z_s, Z_t)` is compared.
#[derive(Clone, Debug)]
pub struct Reference {
    pub a: Vec<f64>,
    /// Half-widths of `a` (zero for an exact reference).
    pub ci: Vec<f64>,
}

/// Brownian-limit signatures of a rescaled ensemble observed at `t_1 < … <
/// t_K` (`K ≥ 2`): kurtosis at `t_K`, `E[Z_{t_1} Z_{t_K}ᵀ] ≈ t_1·A`, and
/// decorrelation of increments over disjoint intervals.
pub fn gaussianity_diagnostics(
    ens: &Ensemble,
    reference: &Reference,
    batches: usize,
) -> Result<DiagnosticsReport, EstimateError> {
    let d = ens.dim;
    let dd = d * d;
    let nt = ens.times.len();
    let n = ens.n_paths();
    if nt < 2 {
        return Err(EstimateError::InvalidSpec("diagnostics need at least two observation times".into()));
    }
    if reference.a.len() != dd || reference.ci.len() != dd {
        return Err(EstimateError::InvalidSpec(format!("reference matrix must have {dd} entries")));
    }
    let moments = second_moments(ens, batches)?;

    let last = nt - 1;
    let kurt: Vec<Option<f64>> = (0..d)
        .map(|j| excess_kurtosis((0..n).map(|p| ens.z(p, last)[j])))
        .collect();
    let kurtosis_ok = kurt
        .iter()
        .all(|k| k.is_some_and(|k| k.abs() <= KURTOSIS_THRESHOLD));

    let (s, t) = (ens.times[0], ens.times[last]);
    let (cross, cross_ci) = batch_means(n, dd, batches, |p, out| {
        let (zs, zt) = (ens.z(p, 0), ens.z(p, last));
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += zs[i] * zt[j];
            }
        }
    });
    let expected: Vec<f64> = reference.a.iter().map(|a| s.min(t) * a).collect();
    let tolerance: Vec<f64> = cross_ci
        .iter()
        .zip(&reference.ci)
        .map(|(c, r)| c + s.min(t) * r)
        .collect();
    let within = (0..dd).all(|k| (cross[k] - expected[k]).abs() <= tolerance[k]);

    let m = nt * d;
    let incr = |p: usize, k: usize, j: usize| {
        let prev = if k == 0 { 0.0 } else { ens.z(p, k - 1)[j] };
        ens.z(p, k)[j] - prev
    };
    let mut mean = vec![0.0; m];
    for p in 0..n {
        for k in 0..nt {
            for j in 0..d {
                mean[k * d + j] += incr(p, k, j);
            }
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    let mut cov = vec![vec![0.0; m]; m];
    let mut row = vec![0.0; m];
    for p in 0..n {
        for k in 0..nt {
            for j in 0..d {
                row[k * d + j] = incr(p, k, j) - mean[k * d + j];
            }
        }
        for a in 0..m {
            for b in 0..m {
                cov[a][b] += row[a] * row[b];
            }
        }
    }
    let corr: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    let den = (cov[a][a] * cov[b][b]).sqrt();
                    if den > 0.0 {
                        cov[a][b] / den
                    } else if a == b {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let threshold = DECORRELATION_FACTOR / (n as f64).sqrt();
    let degenerate = (0..m).any(|a| cov[a][a] == 0.0);
    let decorrelated = !degenerate
        && (0..m).all(|a| (0..m).all(|b| a / d == b / d || corr[a][b].abs() <= threshold));

    let flags = DiagnosticFlags {
        kurtosis: kurtosis_ok,
        cross_covariance: within,
        decorrelation: decorrelated,
        gaussian: kurtosis_ok && within && decorrelated,
    };
    Ok(DiagnosticsReport {
        n_paths: n,
        covariances: moments.per_time,
        excess_kurtosis: kurt,
        kurtosis_threshold: KURTOSIS_THRESHOLD,
        cross_covariance: CrossCovariance {
            s,
            t,
            matrix: cross,
            ci: cross_ci,
            expected,
            tolerance,
            within,
        },
        increment_correlation: corr,
        decorrelation_threshold: threshold,
        ergodic: None,
        flags,
    })
}
