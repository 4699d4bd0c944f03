use serde::{Deserialize, Serialize};

use super::problem::{CellProblem, CornerField};
use super::solve::CorrectorSolution;
use crate::effective::{EffectiveDiffusivity, Provenance};
use crate::CorrectorError;

/// λ → 0 extrapolation of `σᵀ∇u_λ` for one coordinate.
#[derive(Clone, Debug)]
pub struct Extrapolation {
    pub coordinate: usize,
    pub lambdas: Vec<f64>,
    /// Richardson estimate from the two smallest λ.
    pub xi: CornerField,
    /// Richardson estimate from the preceding pair.
    pub xi_previous: CornerField,
    /// `‖xi − xi_previous‖` in the π-weighted corner norm.
    pub error_estimate: f64,
    /// `‖σᵀ∇u_{λ_{k+1}} − σᵀ∇u_{λ_k}‖`.
    pub gradient_differences: Vec<f64>,
    /// `λ_k |u_{λ_k}|²`.
    pub lambda_energy: Vec<f64>,
    pub energy_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationSummary {
    pub coordinate: usize,
    pub lambdas: Vec<f64>,
    pub error_estimate: f64,
    pub gradient_differences: Vec<f64>,
    pub lambda_energy: Vec<f64>,
    pub energy_decreasing: bool,
}

impl Extrapolation {
    pub fn summary(&self) -> ExtrapolationSummary {
        ExtrapolationSummary {
            coordinate: self.coordinate,
            lambdas: self.lambdas.clone(),
            error_estimate: self.error_estimate,
            gradient_differences: self.gradient_differences.clone(),
            lambda_energy: self.lambda_energy.clone(),
            energy_decreasing: self.energy_decreasing,
        }
    }
}

fn richardson(a: &CornerField, b: &CornerField, la: f64, lb: f64) -> CornerField {
    let f = lb / (la - lb);
    CornerField {
        dim: a.dim,
        values: a.values.iter().zip(&b.values).map(|(ga, gb)| gb + (gb - ga) * f).collect(),
    }
}

fn difference(a: &CornerField, b: &CornerField) -> CornerField {
    CornerField {
        dim: a.dim,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    }
}

/// Linear-in-λ Richardson extrapolation over a decreasing geometric λ sequence.
pub fn extrapolate_gradient(
    problem: &CellProblem,
    solutions: &[CorrectorSolution],
) -> Result<Extrapolation, CorrectorError> {
    if solutions.len() < 3 {
        return Err(CorrectorError::TooFewSolutions {
            needed: 3,
            got: solutions.len(),
        });
    }
    let lambdas: Vec<f64> = solutions.iter().map(|s| s.lambda).collect();
    let ratio = lambdas[1] / lambdas[0];
    let geometric = lambdas
        .windows(2)
        .all(|w| w[1] < w[0] && ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-6);
    if !geometric {
        return Err(CorrectorError::BadLambdaSequence(lambdas));
    }
    let coordinate = solutions[0].coordinate;
    if solutions
        .iter()
        .any(|s| s.coordinate != coordinate || !s.u.grid.same_as(problem.grid()))
    {
        return Err(CorrectorError::GridMismatch(
            "solutions must share the coordinate and the problem grid".into(),
        ));
    }
    let grads: Vec<&CornerField> = solutions.iter().map(|s| s.grad_sigma()).collect();
    let gradient_differences: Vec<f64> = grads
        .windows(2)
        .map(|w| problem.corner_norm(&difference(w[1], w[0])))
        .collect();
    let scale = grads.iter().map(|g| problem.corner_norm(g)).fold(0.0, f64::max);
    let floor = 1e-9 * scale.max(1e-300);
    let (first, last) = (gradient_differences[0], *gradient_differences.last().unwrap());
    if last > first && last > floor {
        return Err(CorrectorError::Diverging(gradient_differences));
    }
    let n = solutions.len();
    let xi = richardson(grads[n - 2], grads[n - 1], lambdas[n - 2], lambdas[n - 1]);
    let xi_previous = richardson(grads[n - 3], grads[n - 2], lambdas[n - 3], lambdas[n - 2]);
    let error_estimate = problem.corner_norm(&difference(&xi, &xi_previous));
    let lambda_energy: Vec<f64> = solutions.iter().map(|s| s.lambda * s.l2 * s.l2).collect();
    let energy_decreasing = lambda_energy.windows(2).all(|w| w[1] < w[0]);
    if !energy_decreasing {
        log::warn!("λ|u_λ|² is not decreasing for coordinate {coordinate}: {lambda_energy:?}");
    }
    Ok(Extrapolation {
        coordinate,
        lambdas,
        xi,
        xi_previous,
        error_estimate,
        gradient_differences,
        lambda_energy,
        energy_decreasing,
    })
}

/// `A = ∫(σ + ξ*)(σ + ξ*)* dπ` by cell quadrature.
pub fn effective_matrix(problem: &CellProblem, xi: &[CornerField]) -> Result<EffectiveDiffusivity, CorrectorError> {
    if xi.len() != problem.dim() {
        return Err(CorrectorError::GridMismatch(format!(
            "need {} gradient fields, got {}",
            problem.dim(),
            xi.len()
        )));
    }
    let a = problem.effective_quadrature(xi);
    Ok(EffectiveDiffusivity::new(problem.dim(), a, vec![0.0; problem.dim().pow(2)], Provenance::Corrector))
}

/// `A` from the extrapolated fields, with per-entry half-widths
/// `|A(ξ) − A(ξ_previous)|`.
pub fn corrector_effective_matrix(
    problem: &CellProblem,
    extrapolations: &[Extrapolation],
) -> Result<EffectiveDiffusivity, CorrectorError> {
    let mut sorted: Vec<&Extrapolation> = extrapolations.iter().collect();
    sorted.sort_by_key(|e| e.coordinate);
    if sorted.iter().enumerate().any(|(k, e)| e.coordinate != k) || sorted.len() != problem.dim() {
        return Err(CorrectorError::GridMismatch(
            "need exactly one extrapolation per coordinate".into(),
        ));
    }
    let xi: Vec<CornerField> = sorted.iter().map(|e| e.xi.clone()).collect();
    let xi_prev: Vec<CornerField> = sorted.iter().map(|e| e.xi_previous.clone()).collect();
    let a = problem.effective_quadrature(&xi);
    let b = problem.effective_quadrature(&xi_prev);
    let ci = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
    let mut eff = EffectiveDiffusivity::new(problem.dim(), a, ci, Provenance::Corrector);
    eff.error_estimate = Some(sorted.iter().map(|e| e.error_estimate).fold(0.0, f64::max));
    Ok(eff)
}
