use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use super::factor::FactorizedPreconditioner;
use super::krylov::{gmres, pcg, KrylovMethod, PreconditionerKind, SolveStats, SolverOptions};
use super::problem::{CellProblem, CornerField, OperatorParams};
use crate::CorrectorError;

/// Relative slack of the discrete energy inequality.
pub const ENERGY_TOLERANCE: f64 = 1e-8;

/// `λ|u|² + m‖u‖₁² ≤ |h|²/λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    pub lambda_l2_sq: f64,
    pub m_h1_sq: f64,
    pub bound: f64,
    pub holds: bool,
}

impl EnergyCheck {
    pub fn evaluate(problem: &CellProblem, lambda: f64, u: &[f64], h: &[f64]) -> Self {
        let l2 = problem.weighted_dot(u, u);
        let h1 = problem.h1_tilde_sq(u);
        let m = problem.constants().m;
        let bound = problem.weighted_dot(h, h) / lambda;
        let lhs = lambda * l2 + m * h1;
        Self {
            lambda_l2_sq: lambda * l2,
            m_h1_sq: m * h1,
            bound,
            holds: lhs <= bound * (1.0 + ENERGY_TOLERANCE) + f64::MIN_POSITIVE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorSolution {
    /// Zero-based coordinate `i` of the drift component `b_i`.
    pub coordinate: usize,
    pub lambda: f64,
    pub delta: f64,
    pub theta: f64,
    pub u: GridFunction,
    #[serde(skip)]
    pub grad_sigma_u: Option<CornerField>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: KrylovMethod,
    pub l2: f64,
    pub h1_tilde: f64,
    pub energy: EnergyCheck,
}

impl CorrectorSolution {
    pub fn grad_sigma(&self) -> &CornerField {
        self.grad_sigma_u.as_ref().expect("gradient is populated by the solver")
    }
}

/// Solve `Op u = rhs / w` (i.e. `B(u, ψ) = Σ rhs_n ψ_n`) with `x` as the
/// initial guess; PCG when `B` is symmetric, GMRES otherwise.
pub fn solve_weak(
    problem: &CellProblem,
    params: &OperatorParams,
    rhs: &[f64],
    x: &mut [f64],
    opts: &SolverOptions,
) -> Result<SolveStats, CorrectorError> {
    if !(params.lambda > 0.0) || params.delta < 0.0 {
        return Err(CorrectorError::InvalidParameter(format!(
            "need λ > 0 and δ >= 0, got λ={} δ={}",
            params.lambda, params.delta
        )));
    }
    let w = problem.node_weights();
    let b: Vec<f64> = rhs.iter().zip(w).map(|(f, w)| f / w).collect();
    let precond: Box<dyn Fn(&[f64], &mut [f64])> = match opts.preconditioner {
        PreconditionerKind::Line => {
            let pre = problem.line_preconditioner(params);
            Box::new(move |r: &[f64], z: &mut [f64]| pre.apply(r, z))
        }
        PreconditionerKind::SparseLu => {
            let pre = FactorizedPreconditioner::new(problem, params)?;
            Box::new(move |r: &[f64], z: &mut [f64]| pre.apply(r, z))
        }
    };
    let apply = |v: &[f64], y: &mut [f64]| problem.apply(params, v, y);
    if problem.is_symmetric(params) {
        pcg(&apply, w, &precond, &b, x, opts)
    } else {
        gmres(&apply, w, &precond, &b, x, opts)
    }
}

/// Solve `B_{λ,δ}(u, φ) = (b_i, φ)_π` for all grid `φ`.
pub fn solve_corrector(
    problem: &CellProblem,
    i: usize,
    params: &OperatorParams,
    opts: &SolverOptions,
    guess: Option<&[f64]>,
) -> Result<CorrectorSolution, CorrectorError> {
    if i >= problem.dim() {
        return Err(CorrectorError::InvalidParameter(format!(
            "coordinate {i} out of range for d = {}",
            problem.dim()
        )));
    }
    let rhs = problem.drift_functional(i);
    let mut u = guess.map_or_else(|| vec![0.0; problem.len()], <[f64]>::to_vec);
    let stats = solve_weak(problem, params, &rhs, &mut u, opts)?;
    let h: Vec<f64> = rhs.iter().zip(problem.node_weights()).map(|(f, w)| f / w).collect();
    let energy = EnergyCheck::evaluate(problem, params.lambda, &u, &h);
    if !energy.holds {
        log::warn!("energy inequality violated for coordinate {i} at λ={}: {energy:?}", params.lambda);
    }
    Ok(CorrectorSolution {
        coordinate: i,
        lambda: params.lambda,
        delta: params.delta,
        theta: params.theta,
        l2: problem.l2_norm(&u),
        h1_tilde: problem.h1_tilde_sq(&u).sqrt(),
        grad_sigma_u: Some(problem.sigma_gradient(&u)),
        u: GridFunction {
            grid: problem.grid().clone(),
            values: u,
        },
        residual_norm: stats.residual,
        iterations: stats.iterations,
        method: stats.method,
        energy,
    })
}

/// `(l2, h1_tilde)`: the π-weighted `L²` norm and `‖u‖₁`.
pub fn discrete_norms(problem: &CellProblem, u: &GridFunction) -> Result<(f64, f64), CorrectorError> {
    if !u.grid.same_as(problem.grid()) {
        return Err(CorrectorError::GridMismatch("function and problem grids differ".into()));
    }
    Ok((problem.l2_norm(&u.values), problem.h1_tilde_sq(&u.values).sqrt()))
}

/// Regularization of `−S̃` used for `H₋₁` norms.
pub const H_MINUS_ONE_LAMBDA: f64 = 1e-10;

/// `‖h‖₋₁ = √(w, h)_π` with `(λ₀ − S̃) w = h`, `λ₀` = [`H_MINUS_ONE_LAMBDA`].
pub fn h_minus_one_norm(problem: &CellProblem, h: &GridFunction, opts: &SolverOptions) -> Result<f64, CorrectorError> {
    if !h.grid.same_as(problem.grid()) {
        return Err(CorrectorError::GridMismatch("function and problem grids differ".into()));
    }
    let weak: Vec<f64> = h.values.iter().zip(problem.node_weights()).map(|(v, w)| v * w).collect();
    h_minus_one_functional(problem, &weak, opts)
}

/// `H₋₁` norm of the functional `ψ ↦ Σ F_n ψ_n`.
pub fn h_minus_one_functional(problem: &CellProblem, f: &[f64], opts: &SolverOptions) -> Result<f64, CorrectorError> {
    let mean: f64 = f.iter().sum();
    let scale = f
        .iter()
        .zip(problem.node_weights())
        .map(|(f, w)| f * f / w)
        .sum::<f64>()
        .sqrt();
    if mean.abs() > 1e-10 * scale.max(1.0) {
        return Err(CorrectorError::NonZeroMean { mean });
    }
    let mut w = vec![0.0; problem.len()];
    let opts = SolverOptions {
        rtol: opts.rtol.min(1e-12),
        ..*opts
    };
    solve_weak(problem, &OperatorParams::control(H_MINUS_ONE_LAMBDA), f, &mut w, &opts)?;
    let pairing: f64 = w.iter().zip(f).map(|(a, b)| a * b).sum();
    Ok(pairing.max(0.0).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub coordinate: usize,
    pub lambda: f64,
    pub deltas: Vec<f64>,
    /// `‖u_{δ_k} − u_{δ_{k+1}}‖₁` for consecutive schedule entries.
    pub differences: Vec<f64>,
    /// Differences below this are treated as converged.
    pub floor: f64,
    pub monotone: bool,
    /// First index `k` with difference below the solver tolerance.
    pub converged_at: Option<usize>,
    /// `‖u_{δ_last} − u_0‖₁`.
    pub final_difference: f64,
    pub energy_holds: bool,
}

/// `δ_k = δ₀ / 4^k`, `k = 0..steps`.
pub fn delta_schedule(delta0: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| delta0 / 4f64.powi(k as i32)).collect()
}

/// Solve along the δ schedule with warm starts, then at `δ = 0`.
pub fn delta_continuation(
    problem: &CellProblem,
    i: usize,
    lambda: f64,
    theta: f64,
    deltas: &[f64],
    opts: &SolverOptions,
) -> Result<(CorrectorSolution, ContinuationReport), CorrectorError> {
    let mut prev: Option<CorrectorSolution> = None;
    let mut differences = Vec::new();
    let mut energy_holds = true;
    for &delta in deltas {
        let sol = solve_corrector(
            problem,
            i,
            &OperatorParams::new(lambda, delta, theta),
            opts,
            prev.as_ref().map(|p| p.u.values.as_slice()),
        )?;
        energy_holds &= sol.energy.holds;
        if let Some(p) = &prev {
            differences.push(difference_h1(problem, &p.u.values, &sol.u.values));
        }
        prev = Some(sol);
    }
    let last = prev.as_ref().map(|p| p.u.values.as_slice());
    let fin = solve_corrector(problem, i, &OperatorParams::new(lambda, 0.0, theta), opts, last)?;
    energy_holds &= fin.energy.holds;
    let final_difference = prev.map_or(0.0, |p| difference_h1(problem, &p.u.values, &fin.u.values));
    let floor = 1e3 * opts.rtol * fin.h1_tilde.max(1e-300);
    let monotone = differences.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
    let converged_at = differences.iter().position(|&d| d <= floor);
    Ok((
        fin,
        ContinuationReport {
            coordinate: i,
            lambda,
            deltas: deltas.to_vec(),
            differences,
            floor,
            monotone,
            converged_at,
            final_difference,
            energy_holds,
        },
    ))
}

fn difference_h1(problem: &CellProblem, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    problem.h1_tilde_sq(&diff).sqrt()
}
