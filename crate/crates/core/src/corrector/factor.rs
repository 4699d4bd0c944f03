//! Sparse assembly of the weak operator and its LU factorization, used as a
//! preconditioner for the matrix-free Krylov solvers.

use std::collections::BTreeMap;

use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Mat;

use super::problem::{CellProblem, OperatorParams};
use crate::CorrectorError;

/// Assemble `M` with `M_{nk} = B(e_k, e_n)` as column-major triplets.
pub fn assemble_weak(problem: &CellProblem, p: &OperatorParams) -> Vec<Triplet<usize, usize, f64>> {
    let d = problem.dim();
    let nc = problem.corners_per_cell();
    let grid = problem.grid();
    let steps = grid.steps();
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |row: usize, col: usize, v: f64| *entries.entry((col, row)).or_insert(0.0) += v;
    for c in 0..problem.len() {
        let kc = if p.control { problem.cell_a_tilde(c) } else { problem.cell_k(c) };
        let coef = 0.5 * problem.cell_weights()[c] / nc as f64;
        let corners = problem.cell_corners(c);
        for m in 0..nc {
            for l in 0..d {
                let (lu, ll) = (corners[m | (1 << l)], corners[m & !(1 << l)]);
                for i in 0..d {
                    let (iu, il) = (corners[m | (1 << i)], corners[m & !(1 << i)]);
                    let v = coef * kc[i * d + l] / (steps[i + 1] * steps[l + 1]);
                    if v == 0.0 {
                        continue;
                    }
                    add(lu, iu, v);
                    add(lu, il, -v);
                    add(ll, iu, -v);
                    add(ll, il, v);
                }
            }
        }
    }
    let n = problem.len();
    let slice = grid.slice_len();
    let h_t = steps[0];
    let c1 = p.theta / (2.0 * h_t);
    let c2 = 0.5 * p.delta / (h_t * h_t);
    let w = problem.node_weights();
    for i in 0..n {
        add(i, i, w[i] * p.lambda);
        if grid.n_t() > 1 {
            let up = (i + slice) % n;
            let down = (i + n - slice) % n;
            add(i, i, w[i] * 2.0 * c2);
            add(i, up, w[i] * (-c1 - c2));
            add(i, down, w[i] * (c1 - c2));
        }
    }
    entries
        .into_iter()
        .map(|((col, row), val)| Triplet::new(row, col, val))
        .collect()
}

/// `r ↦ Op⁻¹ r = M⁻¹ W r` by sparse LU.
pub struct FactorizedPreconditioner {
    lu: Lu<usize, f64>,
    w: Vec<f64>,
}

impl FactorizedPreconditioner {
    pub fn new(problem: &CellProblem, p: &OperatorParams) -> Result<Self, CorrectorError> {
        let n = problem.len();
        let triplets = assemble_weak(problem, p);
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| CorrectorError::InvalidParameter(format!("sparse assembly failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| CorrectorError::InvalidParameter(format!("sparse LU failed: {e:?}")))?;
        Ok(Self {
            lu,
            w: problem.node_weights().to_vec(),
        })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let mut rhs = Mat::from_fn(r.len(), 1, |i, _| r[i] * self.w[i]);
        self.lu.solve_in_place(rhs.as_mut());
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = rhs[(i, 0)];
        }
    }
}
