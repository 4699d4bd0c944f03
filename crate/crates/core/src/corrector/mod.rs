//! Discrete resolvent (corrector) equation on a periodic space-time cell,
//! discrete norms, λ → 0 extrapolation and the corrector-based effective
//! matrix.

mod extrapolate;
pub mod factor;
mod grid;
pub mod io;
pub mod krylov;
mod problem;
mod solve;

pub use extrapolate::{
    corrector_effective_matrix, effective_matrix, extrapolate_gradient, Extrapolation, ExtrapolationSummary,
};
pub use grid::{Grid, GridFunction};
pub use krylov::{KrylovMethod, PreconditionerKind, SolveStats, SolverOptions};
pub use problem::{grid_for, CellProblem, CornerField, LinePreconditioner, OperatorParams};
pub use solve::{
    delta_continuation, delta_schedule, discrete_norms, h_minus_one_functional, h_minus_one_norm, solve_corrector,
    solve_weak, ContinuationReport, CorrectorSolution, EnergyCheck, ENERGY_TOLERANCE, H_MINUS_ONE_LAMBDA,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective::EffectiveDiffusivity;
use crate::medium::MediumInstance;
use crate::CorrectorError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorConfig {
    /// `[n_t, n_1, …, n_d]`.
    pub shape: Vec<usize>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// δ continuation schedule, used when the grid has more than one time slice.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "unit")]
    pub theta: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_lambdas() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn default_deltas() -> Vec<f64> {
    delta_schedule(0.1, 4)
}

fn unit() -> f64 {
    1.0
}

impl CorrectorConfig {
    pub fn new(shape: Vec<usize>) -> Self {
        Self {
            shape,
            lambdas: default_lambdas(),
            deltas: default_deltas(),
            theta: 1.0,
            solver: SolverOptions::default(),
        }
    }
}

pub struct CorrectorRun {
    /// `solutions[i][k]`: coordinate `i`, `λ_k`.
    pub solutions: Vec<Vec<CorrectorSolution>>,
    pub continuation: Vec<ContinuationReport>,
    pub extrapolations: Vec<Extrapolation>,
    pub effective: EffectiveDiffusivity,
}

impl CorrectorRun {
    pub fn energy_holds(&self) -> bool {
        self.solutions.iter().flatten().all(|s| s.energy.holds) && self.continuation.iter().all(|c| c.energy_holds)
    }
}

/// Solve every coordinate at every λ (with δ continuation on time-resolved
/// grids), extrapolate and assemble `A`.
pub fn run_cell_problem(
    medium: &MediumInstance,
    config: &CorrectorConfig,
) -> Result<(CellProblem, CorrectorRun), CorrectorError> {
    let grid = grid_for(medium, &config.shape)?;
    let problem = CellProblem::new(medium, grid)?;
    let continued = problem.grid().n_t() > 1 && !config.deltas.is_empty();
    let per_coord: Vec<_> = (0..problem.dim())
        .into_par_iter()
        .map(|i| {
            let mut sols: Vec<CorrectorSolution> = Vec::new();
            let mut reports = Vec::new();
            for &lambda in &config.lambdas {
                if continued {
                    let (sol, rep) =
                        delta_continuation(&problem, i, lambda, config.theta, &config.deltas, &config.solver)?;
                    sols.push(sol);
                    reports.push(rep);
                } else {
                    let guess = sols.last().map(|s| s.u.values.as_slice());
                    let params = OperatorParams::new(lambda, 0.0, config.theta);
                    sols.push(solve_corrector(&problem, i, &params, &config.solver, guess)?);
                }
            }
            let ex = extrapolate_gradient(&problem, &sols)?;
            Ok::<_, CorrectorError>((sols, reports, ex))
        })
        .collect::<Result<_, _>>()?;
    let mut run = CorrectorRun {
        solutions: Vec::new(),
        continuation: Vec::new(),
        extrapolations: Vec::new(),
        effective: EffectiveDiffusivity::new(1, vec![0.0], vec![0.0], crate::effective::Provenance::Corrector),
    };
    for (sols, reps, ex) in per_coord {
        run.solutions.push(sols);
        run.continuation.extend(reps);
        run.extrapolations.push(ex);
    }
    run.effective = corrector_effective_matrix(&problem, &run.extrapolations)?;
    Ok((problem, run))
}
