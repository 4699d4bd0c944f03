//! Discrete cell problem on a periodic space-time grid.
//!
//! Every grid cell (indexed by its lower corner node) carries coefficients
//! evaluated at its spatial centre and at the time of its slice. Gradients
//! are taken as one-sided differences from each of the `2^d` corners of the
//! cell and the quadrature averages over corners:
//!
//! `B(φ, ψ) = λ(φ, ψ) + ½ Σ_cells w_c 2^{-d} Σ_corners ∇φᵀ(a + H)∇ψ
//!           − θ(D_t φ, ψ) + (δ/2)(D_t⁺φ, D_t⁺ψ)`
//!
//! with `D_t` the centred and `D_t⁺` the forward time difference. All
//! inner products carry the normalized weight `e^{−2V}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::grid::{Grid, GridFunction};
use crate::linalg::sym_eigenvalues;
use crate::medium::{ControlConstants, MediumInstance, Periodicity, PointSample};
use crate::{CorrectorError, MAX_DIM};

const MAX_CORNERS: usize = 1 << MAX_DIM;

/// Parameters of `B^θ_{λ,δ}`. With `control` set, `a + H` is replaced by `ã`
/// (the operator `λ − S̃ − …`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorParams {
    pub lambda: f64,
    pub delta: f64,
    pub theta: f64,
    pub control: bool,
}

impl OperatorParams {
    pub fn new(lambda: f64, delta: f64, theta: f64) -> Self {
        Self {
            lambda,
            delta,
            theta,
            control: false,
        }
    }

    pub fn control(lambda: f64) -> Self {
        Self {
            lambda,
            delta: 0.0,
            theta: 0.0,
            control: true,
        }
    }
}

/// Values of a `d`-vector per cell corner: index `(cell · 2^d + corner) · d + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerField {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl CornerField {
    pub fn zeros(cells: usize, dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; cells * (1 << dim) * dim],
        }
    }
}

pub struct CellProblem {
    grid: Grid,
    d: usize,
    corners_per_cell: usize,
    inv_h: [f64; MAX_DIM],
    h_t: f64,
    node_w: Vec<f64>,
    /// Cell weight, normalized to total mass 1.
    cell_w: Vec<f64>,
    k: Vec<f64>,
    a_tilde: Vec<f64>,
    sigma: Vec<f64>,
    corners: Vec<usize>,
    diag_k: Vec<f64>,
    diag_a_tilde: Vec<f64>,
    constants: ControlConstants,
    symmetric_k: bool,
    min_eig_a: f64,
    medium_id: String,
}

impl std::fmt::Debug for CellProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CellProblem")
            .field("grid", &self.grid)
            .field("medium", &self.medium_id)
            .finish_non_exhaustive()
    }
}

/// Grid spanning exactly one period cell of the medium.
pub fn grid_for(medium: &MediumInstance, shape: &[usize]) -> Result<Grid, CorrectorError> {
    match medium.field().periodicity() {
        Periodicity::Periodic { time, space, .. } => {
            if shape.len() != space.len() + 1 {
                return Err(CorrectorError::GridMismatch(format!(
                    "grid shape {shape:?} does not match medium dimension {}",
                    space.len()
                )));
            }
            let mut periods = vec![time];
            periods.extend(space);
            Grid::new(shape.to_vec(), periods)
        }
        Periodicity::StationaryRandom => Err(CorrectorError::NotPeriodic),
    }
}

fn is_multiple(length: f64, period: f64) -> bool {
    let r = length / period;
    r >= 1.0 - 1e-12 && (r - r.round()).abs() <= 1e-9 * r.max(1.0)
}

impl CellProblem {
    pub fn new(medium: &MediumInstance, grid: Grid) -> Result<Self, CorrectorError> {
        let d = medium.dim();
        if grid.dim() != d {
            return Err(CorrectorError::GridMismatch(format!(
                "grid has {} space axes, medium has {d}",
                grid.dim()
            )));
        }
        match medium.field().periodicity() {
            Periodicity::StationaryRandom => return Err(CorrectorError::NotPeriodic),
            Periodicity::Periodic {
                time,
                space,
                time_dependent,
            } => {
                let space_ok = space.iter().zip(&grid.periods[1..]).all(|(p, l)| is_multiple(*l, *p));
                let time_ok = !time_dependent || is_multiple(grid.periods[0], time);
                if !space_ok || !time_ok {
                    return Err(CorrectorError::GridMismatch(format!(
                        "grid periods {:?} are not multiples of the medium periods ({time}, {space:?})",
                        grid.periods
                    )));
                }
            }
        }

        let nc = 1usize << d;
        let n = grid.len();
        let steps = grid.steps();
        let mut inv_h = [0.0; MAX_DIM];
        for j in 0..d {
            inv_h[j] = 1.0 / steps[j + 1];
        }
        let strides = grid.strides();

        let mut corners = vec![0usize; n * nc];
        let mut multi = vec![0usize; d + 1];
        let mut shifted = vec![0usize; d + 1];
        for c in 0..n {
            grid.multi_index(c, &mut multi);
            for m in 0..nc {
                shifted.copy_from_slice(&multi);
                for j in 0..d {
                    if m & (1 << j) != 0 {
                        shifted[j + 1] = (multi[j + 1] + 1) % grid.shape[j + 1];
                    }
                }
                corners[c * nc + m] = shifted.iter().zip(&strides).map(|(a, s)| a * s).sum();
            }
        }

        let dd = d * d;
        let mut k = vec![0.0; n * dd];
        let mut a_tilde = vec![0.0; n * dd];
        let mut sigma = vec![0.0; n * dd];
        let mut node_w = vec![0.0; n];
        let mut cell_w = vec![0.0; n];
        let mut s = PointSample::new(d);
        let mut centre = vec![0.0; d];
        let mut symmetric_k = true;
        let mut min_eig_a = f64::INFINITY;
        let mut a_sym = vec![0.0; dd];
        for c in 0..n {
            let (t, x) = grid.node(c);
            medium.sample(t, &x, &mut s)?;
            node_w[c] = (-2.0 * s.v).exp();
            for j in 0..d {
                centre[j] = x[j] + 0.5 * steps[j + 1];
            }
            medium.sample(t, &centre, &mut s)?;
            cell_w[c] = (-2.0 * s.v).exp();
            for e in 0..dd {
                k[c * dd + e] = s.a[e] + s.h[e];
                a_sym[e] = s.a[e];
            }
            a_tilde[c * dd..(c + 1) * dd].copy_from_slice(&s.a_tilde);
            sigma[c * dd..(c + 1) * dd].copy_from_slice(&s.sigma);
            if s.h.iter().any(|&h| h != 0.0) {
                symmetric_k = false;
            }
            min_eig_a = min_eig_a.min(sym_eigenvalues(&a_sym, d)[0]);
        }
        let zn: f64 = node_w.iter().sum();
        node_w.iter_mut().for_each(|w| *w /= zn);
        let zc: f64 = cell_w.iter().sum();
        cell_w.iter_mut().for_each(|w| *w /= zc);

        let mut problem = Self {
            grid,
            d,
            corners_per_cell: nc,
            inv_h,
            h_t: steps[0],
            node_w,
            cell_w,
            k,
            a_tilde,
            sigma,
            corners,
            diag_k: Vec::new(),
            diag_a_tilde: Vec::new(),
            constants: medium.field().control_constants(),
            symmetric_k,
            min_eig_a,
            medium_id: medium.id(),
        };
        problem.diag_k = problem.spatial_diagonal(&problem.k);
        problem.diag_a_tilde = problem.spatial_diagonal(&problem.a_tilde);
        Ok(problem)
    }

    /// Diagonal of the spatial stiffness `½ Σ w_c 2^{-d} Σ ∇e_nᵀ K ∇e_n`.
    fn spatial_diagonal(&self, coef: &[f64]) -> Vec<f64> {
        let (d, nc) = (self.d, self.corners_per_cell);
        let mut diag = vec![0.0; self.grid.len()];
        let mut g = [0.0; MAX_DIM];
        for c in 0..self.grid.len() {
            let kc = &coef[c * d * d..(c + 1) * d * d];
            let weight = 0.5 * self.cell_w[c] / nc as f64;
            for q in 0..nc {
                let mut acc = 0.0;
                for m in 0..nc {
                    for j in 0..d {
                        let bit = 1 << j;
                        g[j] = if q == m | bit {
                            self.inv_h[j]
                        } else if q == m & !bit {
                            -self.inv_h[j]
                        } else {
                            0.0
                        };
                    }
                    for i in 0..d {
                        for j in 0..d {
                            acc += g[i] * kc[i * d + j] * g[j];
                        }
                    }
                }
                diag[self.corners[c * nc + q]] += weight * acc;
            }
        }
        diag
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn corners_per_cell(&self) -> usize {
        self.corners_per_cell
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_w
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_w
    }

    pub fn constants(&self) -> &ControlConstants {
        &self.constants
    }

    pub fn min_eigenvalue_a(&self) -> f64 {
        self.min_eig_a
    }

    pub fn medium_id(&self) -> &str {
        &self.medium_id
    }

    /// `σ` at the centre of cell `c`.
    pub fn cell_sigma(&self, c: usize) -> &[f64] {
        &self.sigma[c * self.d * self.d..(c + 1) * self.d * self.d]
    }

    pub fn cell_a_tilde(&self, c: usize) -> &[f64] {
        &self.a_tilde[c * self.d * self.d..(c + 1) * self.d * self.d]
    }

    /// `a + H` at the centre of cell `c`.
    pub fn cell_k(&self, c: usize) -> &[f64] {
        &self.k[c * self.d * self.d..(c + 1) * self.d * self.d]
    }

    pub fn cell_corners(&self, c: usize) -> &[usize] {
        &self.corners[c * self.corners_per_cell..(c + 1) * self.corners_per_cell]
    }

    /// Whether `B` is symmetric for these parameters.
    pub fn is_symmetric(&self, p: &OperatorParams) -> bool {
        (p.control || self.symmetric_k) && (p.theta == 0.0 || self.grid.n_t() <= 2)
    }

    pub fn weighted_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.node_w.iter().zip(x).zip(y).map(|((w, a), b)| w * a * b).sum()
    }

    /// π-mean `Σ w_n f_n`.
    pub fn mean(&self, f: &[f64]) -> f64 {
        self.node_w.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.weighted_dot(f, f).sqrt()
    }

    /// Corner gradient of `φ` in cell `c` at corner `m`.
    #[inline]
    fn corner_gradient(&self, vals: &[f64; MAX_CORNERS], m: usize, g: &mut [f64; MAX_DIM]) {
        for j in 0..self.d {
            let bit = 1 << j;
            g[j] = (vals[m | bit] - vals[m & !bit]) * self.inv_h[j];
        }
    }

    #[inline]
    fn gather(&self, c: usize, phi: &[f64], vals: &mut [f64; MAX_CORNERS]) {
        for (v, &n) in vals.iter_mut().zip(self.cell_corners(c)) {
            *v = phi[n];
        }
    }

    /// Weak-form application `y_n = B(φ, e_n)`.
    pub fn apply_weak(&self, p: &OperatorParams, phi: &[f64], y: &mut [f64]) {
        let (d, nc) = (self.d, self.corners_per_cell);
        let coef_all = if p.control { &self.a_tilde } else { &self.k };
        let slice = self.grid.slice_len();
        y.par_chunks_mut(slice).enumerate().for_each(|(k, ys)| {
            ys.fill(0.0);
            let base = k * slice;
            let mut vals = [0.0; MAX_CORNERS];
            let mut acc = [0.0; MAX_CORNERS];
            let mut g = [0.0; MAX_DIM];
            for c in base..base + slice {
                let kc = &coef_all[c * d * d..(c + 1) * d * d];
                let coef = 0.5 * self.cell_w[c] / nc as f64;
                self.gather(c, phi, &mut vals);
                acc[..nc].fill(0.0);
                for m in 0..nc {
                    self.corner_gradient(&vals, m, &mut g);
                    for j in 0..d {
                        let mut f = 0.0;
                        for i in 0..d {
                            f += kc[i * d + j] * g[i];
                        }
                        let f = coef * f * self.inv_h[j];
                        let bit = 1 << j;
                        acc[m | bit] += f;
                        acc[m & !bit] -= f;
                    }
                }
                for (m, &n) in self.cell_corners(c).iter().enumerate() {
                    ys[n - base] += acc[m];
                }
            }
        });
        self.add_time_terms(p, phi, y);
    }

    fn add_time_terms(&self, p: &OperatorParams, phi: &[f64], y: &mut [f64]) {
        let n = self.len();
        let slice = self.grid.slice_len();
        let nt = self.grid.n_t();
        let c1 = p.theta / (2.0 * self.h_t);
        let c2 = 0.5 * p.delta / (self.h_t * self.h_t);
        let time_terms = nt > 1 && (c1 != 0.0 || c2 != 0.0);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut v = p.lambda * phi[i];
            if time_terms {
                let up = phi[(i + slice) % n];
                let down = phi[(i + n - slice) % n];
                v += -c1 * (up - down) - c2 * (up - 2.0 * phi[i] + down);
            }
            *yi += self.node_w[i] * v;
        });
    }

    /// Strong form `(Op φ)_n = B(φ, e_n) / w_n`, so that `(Op φ, ψ)_π = B(φ, ψ)`.
    pub fn apply(&self, p: &OperatorParams, phi: &[f64], y: &mut [f64]) {
        self.apply_weak(p, phi, y);
        for (yi, w) in y.iter_mut().zip(&self.node_w) {
            *yi /= w;
        }
    }

    /// Diagonal of the strong operator.
    pub fn diagonal(&self, p: &OperatorParams) -> Vec<f64> {
        let spatial = if p.control { &self.diag_a_tilde } else { &self.diag_k };
        let dt = if self.grid.n_t() > 1 {
            p.delta / (self.h_t * self.h_t)
        } else {
            0.0
        };
        spatial
            .iter()
            .zip(&self.node_w)
            .map(|(s, w)| s / w + p.lambda + dt)
            .collect()
    }

    /// Line preconditioner: the operator restricted to the time line of each
    /// spatial node, with the spatial part reduced to its diagonal. Exact in
    /// the time direction, Jacobi in space.
    pub fn line_preconditioner(&self, p: &OperatorParams) -> LinePreconditioner {
        let diag = self.diagonal(p);
        let nt = self.grid.n_t();
        let slice = self.grid.slice_len();
        let c1 = p.theta / (2.0 * self.h_t);
        let c2 = 0.5 * p.delta / (self.h_t * self.h_t);
        if nt == 1 {
            return LinePreconditioner {
                nt,
                slice,
                inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
                lines: Vec::new(),
            };
        }
        let lines = (0..slice)
            .map(|s| {
                let mut m = DMatrix::zeros(nt, nt);
                for k in 0..nt {
                    let (up, down) = ((k + 1) % nt, (k + nt - 1) % nt);
                    m[(k, k)] += diag[k * slice + s];
                    m[(k, up)] += -c1 - c2;
                    m[(k, down)] += c1 - c2;
                }
                m.lu()
            })
            .collect();
        LinePreconditioner {
            nt,
            slice,
            inv_diag: Vec::new(),
            lines,
        }
    }

    /// Direct evaluation of `B(φ, ψ)` (independent of [`Self::apply_weak`]).
    pub fn bilinear(&self, p: &OperatorParams, phi: &[f64], psi: &[f64]) -> f64 {
        let (d, nc) = (self.d, self.corners_per_cell);
        let coef_all = if p.control { &self.a_tilde } else { &self.k };
        let (mut vp, mut vq) = ([0.0; MAX_CORNERS], [0.0; MAX_CORNERS]);
        let (mut gp, mut gq) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
        let mut spatial = 0.0;
        for c in 0..self.len() {
            let kc = &coef_all[c * d * d..(c + 1) * d * d];
            self.gather(c, phi, &mut vp);
            self.gather(c, psi, &mut vq);
            let mut cell = 0.0;
            for m in 0..nc {
                self.corner_gradient(&vp, m, &mut gp);
                self.corner_gradient(&vq, m, &mut gq);
                for i in 0..d {
                    for j in 0..d {
                        cell += gp[i] * kc[i * d + j] * gq[j];
                    }
                }
            }
            spatial += 0.5 * self.cell_w[c] / nc as f64 * cell;
        }
        let n = self.len();
        let slice = self.grid.slice_len();
        let mut time = 0.0;
        for i in 0..n {
            let up = (i + slice) % n;
            let down = (i + n - slice) % n;
            let w = self.node_w[i];
            time += w * p.lambda * phi[i] * psi[i];
            if self.grid.n_t() > 1 {
                time -= w * p.theta * (phi[up] - phi[down]) / (2.0 * self.h_t) * psi[i];
                time += w * 0.5 * p.delta * (phi[up] - phi[i]) * (psi[up] - psi[i]) / (self.h_t * self.h_t);
            }
        }
        spatial + time
    }

    /// Weak right-hand side `F_n = (b_i, e_n)_π = −½ Σ_j ((a + H)_ij, D_j e_n)_π`.
    pub fn drift_functional(&self, i: usize) -> Vec<f64> {
        let (d, nc) = (self.d, self.corners_per_cell);
        let mut f = vec![0.0; self.len()];
        for c in 0..self.len() {
            let kc = self.cell_k(c);
            let coef = 0.5 * self.cell_w[c] / nc as f64;
            let corners = self.cell_corners(c);
            for m in 0..nc {
                for j in 0..d {
                    let v = -coef * kc[i * d + j] * self.inv_h[j];
                    let bit = 1 << j;
                    f[corners[m | bit]] += v;
                    f[corners[m & !bit]] -= v;
                }
            }
        }
        f
    }

    /// Nodal drift `b_i = F / w`, the `L²(π)` representative of the functional.
    pub fn nodal_drift(&self, i: usize) -> GridFunction {
        let f = self.drift_functional(i);
        GridFunction {
            grid: self.grid.clone(),
            values: f.iter().zip(&self.node_w).map(|(f, w)| f / w).collect(),
        }
    }

    /// Corner gradients of `φ`.
    pub fn gradient(&self, phi: &[f64]) -> CornerField {
        let (d, nc) = (self.d, self.corners_per_cell);
        let mut out = CornerField::zeros(self.len(), d);
        let mut vals = [0.0; MAX_CORNERS];
        let mut g = [0.0; MAX_DIM];
        for c in 0..self.len() {
            self.gather(c, phi, &mut vals);
            for m in 0..nc {
                self.corner_gradient(&vals, m, &mut g);
                let o = (c * nc + m) * d;
                out.values[o..o + d].copy_from_slice(&g[..d]);
            }
        }
        out
    }

    /// `σᵀ∇φ` per cell corner, with `σ` at the cell centre.
    pub fn sigma_gradient(&self, phi: &[f64]) -> CornerField {
        let (d, nc) = (self.d, self.corners_per_cell);
        let mut out = self.gradient(phi);
        let mut tmp = [0.0; MAX_DIM];
        for c in 0..self.len() {
            let s = self.cell_sigma(c);
            for m in 0..nc {
                let o = (c * nc + m) * d;
                let g = &mut out.values[o..o + d];
                for k in 0..d {
                    tmp[k] = (0..d).map(|j| s[j * d + k] * g[j]).sum();
                }
                g.copy_from_slice(&tmp[..d]);
            }
        }
        out
    }

    /// π-weighted `L²` norm of a corner field.
    pub fn corner_norm(&self, f: &CornerField) -> f64 {
        let (d, nc) = (self.d, self.corners_per_cell);
        let mut acc = 0.0;
        for c in 0..self.len() {
            let w = self.cell_w[c] / nc as f64;
            let v = &f.values[c * nc * d..(c + 1) * nc * d];
            acc += w * v.iter().map(|x| x * x).sum::<f64>();
        }
        acc.sqrt()
    }

    /// `‖φ‖₁² = ½ Σ w_c 2^{-d} Σ ∇φᵀ ã ∇φ`.
    pub fn h1_tilde_sq(&self, phi: &[f64]) -> f64 {
        self.quadratic_energy(phi, &self.a_tilde)
    }

    /// `½(a∇φ, ∇φ)_π`.
    pub fn a_energy(&self, phi: &[f64]) -> f64 {
        self.quadratic_energy(phi, &self.k)
    }

    fn quadratic_energy(&self, phi: &[f64], coef_all: &[f64]) -> f64 {
        let (d, nc) = (self.d, self.corners_per_cell);
        let mut vals = [0.0; MAX_CORNERS];
        let mut g = [0.0; MAX_DIM];
        let mut acc = 0.0;
        for c in 0..self.len() {
            let kc = &coef_all[c * d * d..(c + 1) * d * d];
            self.gather(c, phi, &mut vals);
            let mut cell = 0.0;
            for m in 0..nc {
                self.corner_gradient(&vals, m, &mut g);
                for i in 0..d {
                    for j in 0..d {
                        cell += g[i] * kc[i * d + j] * g[j];
                    }
                }
            }
            acc += 0.5 * self.cell_w[c] / nc as f64 * cell;
        }
        acc
    }

    /// `Σ_c w_c 2^{-d} Σ_m (σ_c + Ξ)(σ_c + Ξ)ᵀ`, where row `i` of `Ξ` is the
    /// corner value of `xi[i]`. Returned row-major and symmetrized.
    pub fn effective_quadrature(&self, xi: &[CornerField]) -> Vec<f64> {
        let (d, nc) = (self.d, self.corners_per_cell);
        let mut a = vec![0.0; d * d];
        let mut row = [[0.0; MAX_DIM]; MAX_DIM];
        for c in 0..self.len() {
            let s = self.cell_sigma(c);
            let w = self.cell_w[c] / nc as f64;
            for m in 0..nc {
                for (i, r) in row.iter_mut().enumerate().take(d) {
                    let o = (c * nc + m) * d;
                    for k in 0..d {
                        r[k] = s[i * d + k] + xi[i].values[o + k];
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        let dot: f64 = (0..d).map(|k| row[i][k] * row[j][k]).sum();
                        a[i * d + j] += w * dot;
                    }
                }
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                let m = 0.5 * (a[i * d + j] + a[j * d + i]);
                a[i * d + j] = m;
                a[j * d + i] = m;
            }
        }
        a
    }
}

/// Precomputed factorizations for [`CellProblem::line_preconditioner`].
pub struct LinePreconditioner {
    nt: usize,
    slice: usize,
    inv_diag: Vec<f64>,
    lines: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl LinePreconditioner {
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        if self.nt == 1 {
            for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
                *zi = ri * d;
            }
            return;
        }
        let mut rhs = DVector::zeros(self.nt);
        for (s, lu) in self.lines.iter().enumerate() {
            for k in 0..self.nt {
                rhs[k] = r[k * self.slice + s];
            }
            lu.solve_mut(&mut rhs);
            for k in 0..self.nt {
                z[k * self.slice + s] = rhs[k];
            }
        }
    }
}
