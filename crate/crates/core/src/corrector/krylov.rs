//! Matrix-free Krylov solvers in a diagonally weighted inner product
//! `(x, y)_w = Σ w_n x_n y_n`. Preconditioners are passed as `r ↦ P⁻¹r`.

use serde::{Deserialize, Serialize};

use crate::CorrectorError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default)]
    pub preconditioner: PreconditionerKind,
}

/// `line`: exact in time, Jacobi in space, matrix-free.
/// `sparse_lu`: LU factorization of the assembled operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    Line,
    #[default]
    SparseLu,
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    20_000
}

fn default_restart() -> usize {
    60
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: default_rtol(),
            max_iter: default_max_iter(),
            restart: default_restart(),
            preconditioner: PreconditionerKind::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrylovMethod {
    Cg,
    Gmres,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub method: KrylovMethod,
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖_w / ‖b‖_w`.
    pub residual: f64,
    #[serde(skip)]
    pub history: Vec<f64>,
}

fn dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, a), b)| w * a * b).sum()
}

fn norm(w: &[f64], x: &[f64]) -> f64 {
    dot(w, x, x).sqrt()
}

fn residual(apply: &dyn Fn(&[f64], &mut [f64]), b: &[f64], x: &[f64], r: &mut [f64]) {
    apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

fn not_converged(iterations: usize, residual: f64, history: Vec<f64>) -> CorrectorError {
    CorrectorError::NotConverged {
        iterations,
        residual,
        history,
    }
}

/// Preconditioned conjugate gradients for an operator self-adjoint and
/// positive in `(·, ·)_w`. `x` holds the initial guess on entry.
pub fn pcg(
    apply: &dyn Fn(&[f64], &mut [f64]),
    w: &[f64],
    precond: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: &SolverOptions,
) -> Result<SolveStats, CorrectorError> {
    let n = b.len();
    let bnorm = norm(w, b);
    let mut stats = SolveStats {
        method: KrylovMethod::Cg,
        iterations: 0,
        residual: 0.0,
        history: Vec::new(),
    };
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(stats);
    }
    let mut r = vec![0.0; n];
    residual(apply, b, x, &mut r);
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(w, &r, &z);
    let mut rel = norm(w, &r) / bnorm;
    stats.history.push(rel);
    while rel > opts.rtol {
        if stats.iterations >= opts.max_iter {
            return Err(not_converged(stats.iterations, rel, stats.history));
        }
        apply(&p, &mut ap);
        let pap = dot(w, &p, &ap);
        if !(pap > 0.0) {
            return Err(not_converged(stats.iterations, rel, stats.history));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        stats.iterations += 1;
        rel = norm(w, &r) / bnorm;
        if rel <= opts.rtol {
            // confirm with the true residual to guard against drift
            residual(apply, b, x, &mut r);
            rel = norm(w, &r) / bnorm;
        }
        stats.history.push(rel);
        precond(&r, &mut z);
        let rz_new = dot(w, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    stats.residual = rel;
    Ok(stats)
}

/// Restarted GMRES with right preconditioning, orthogonal in
/// `(·, ·)_w`. `x` holds the initial guess on entry.
pub fn gmres(
    apply: &dyn Fn(&[f64], &mut [f64]),
    w: &[f64],
    precond: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: &SolverOptions,
) -> Result<SolveStats, CorrectorError> {
    let n = b.len();
    let m = opts.restart.max(1);
    let bnorm = norm(w, b);
    let mut stats = SolveStats {
        method: KrylovMethod::Gmres,
        iterations: 0,
        residual: 0.0,
        history: Vec::new(),
    };
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(stats);
    }
    let mut r = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    let mut z = vec![0.0; n];
    let mut v = vec![0.0; n];
    loop {
        residual(apply, b, x, &mut r);
        let beta = norm(w, &r);
        let rel = beta / bnorm;
        stats.history.push(rel);
        if rel <= opts.rtol {
            stats.residual = rel;
            return Ok(stats);
        }
        if stats.iterations >= opts.max_iter {
            return Err(not_converged(stats.iterations, rel, stats.history));
        }
        basis.clear();
        basis.push(r.iter().map(|ri| ri / beta).collect());
        g.fill(0.0);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            precond(&basis[k], &mut z);
            apply(&z, &mut v);
            for (j, hj) in h.iter_mut().enumerate().take(k + 1) {
                let hjk = dot(w, &v, &basis[j]);
                hj[k] = hjk;
                for (vi, bi) in v.iter_mut().zip(&basis[j]) {
                    *vi -= hjk * bi;
                }
            }
            // second Gram-Schmidt pass for stability
            for (j, hj) in h.iter_mut().enumerate().take(k + 1) {
                let c = dot(w, &v, &basis[j]);
                hj[k] += c;
                for (vi, bi) in v.iter_mut().zip(&basis[j]) {
                    *vi -= c * bi;
                }
            }
            let hk1 = norm(w, &v);
            h[k + 1][k] = hk1;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let rr = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / rr;
            sn[k] = h[k + 1][k] / rr;
            h[k][k] = rr;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            stats.iterations += 1;
            k_used = k + 1;
            let est = g[k + 1].abs() / bnorm;
            stats.history.push(est);
            if est <= opts.rtol || hk1 == 0.0 || stats.iterations >= opts.max_iter {
                break;
            }
            basis.push(v.iter().map(|vi| vi / hk1).collect());
        }
        // y = H⁻¹ g, x += P⁻¹ V y
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        v.fill(0.0);
        for (j, yj) in y.iter().enumerate() {
            for (vi, bi) in v.iter_mut().zip(&basis[j]) {
                *vi += yj * bi;
            }
        }
        precond(&v, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jacobi(d: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |r: &[f64], z: &mut [f64]| {
            for (zi, ri) in z.iter_mut().zip(r) {
                *zi = ri / d;
            }
        }
    }

    fn tridiag(skew: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            let n = x.len();
            for i in 0..n {
                let l = x[(i + n - 1) % n];
                let r = x[(i + 1) % n];
                y[i] = 2.1 * x[i] - l - r + skew * (r - l);
            }
        }
    }

    #[test]
    fn cg_and_gmres_solve_symmetric_system() {
        let n = 50;
        let w = vec![1.0 / n as f64; n];
        let diag = jacobi(2.1);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let op = tridiag(0.0);
        let opts = SolverOptions::default();
        let mut x1 = vec![0.0; n];
        pcg(&op, &w, &diag, &b, &mut x1, &opts).unwrap();
        let mut x2 = vec![0.0; n];
        gmres(&op, &w, &diag, &b, &mut x2, &opts).unwrap();
        let mut r = vec![0.0; n];
        op(&x1, &mut r);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-8);
            assert!((x1[i] - x2[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system_with_restarts() {
        let n = 80;
        let w = vec![1.0; n];
        let diag = jacobi(2.1);
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let op = tridiag(0.7);
        let opts = SolverOptions {
            restart: 10,
            ..SolverOptions::default()
        };
        let mut x = vec![0.0; n];
        let stats = gmres(&op, &w, &diag, &b, &mut x, &opts).unwrap();
        assert!(stats.residual <= 1e-10);
        let mut r = vec![0.0; n];
        op(&x, &mut r);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let w = vec![1.0; 4];
        let mut x = vec![3.0; 4];
        pcg(&tridiag(0.0), &w, &jacobi(2.1), &[0.0; 4], &mut x, &SolverOptions::default()).unwrap();
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn exhausted_iterations_report_history() {
        let n = 200;
        let w = vec![1.0; n];
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let opts = SolverOptions {
            max_iter: 3,
            restart: 3,
            rtol: 1e-14,
            ..SolverOptions::default()
        };
        let mut x = vec![0.0; n];
        match gmres(&tridiag(0.2), &w, &jacobi(2.1), &b, &mut x, &opts) {
            Err(CorrectorError::NotConverged { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
