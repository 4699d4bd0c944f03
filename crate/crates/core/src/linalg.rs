//! Row-major helpers for the small dense matrices that appear pointwise in
//! the coefficient fields. Sizes are `d × d` with `d ≤ MAX_DIM`.

use nalgebra::{DMatrix, SymmetricEigen};

/// `out = m · mᵀ` for a square row-major `m`.
pub fn gram(m: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for k in 0..d {
            let mut s = 0.0;
            for l in 0..d {
                s += m[i * d + l] * m[k * d + l];
            }
            out[i * d + k] = s;
        }
    }
}

/// `out = p · qᵀ + q · pᵀ`, the product-rule derivative of `m mᵀ`.
pub fn sym_product_derivative(p: &[f64], q: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for k in 0..d {
            let mut s = 0.0;
            for l in 0..d {
                s += p[i * d + l] * q[k * d + l] + q[i * d + l] * p[k * d + l];
            }
            out[i * d + k] = s;
        }
    }
}

/// `vᵀ m v`.
pub fn quad_form(m: &[f64], v: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for k in 0..d {
            row += m[i * d + k] * v[k];
        }
        s += v[i] * row;
    }
    s
}

pub fn max_abs(m: &[f64]) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn to_dmatrix(m: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, m)
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &[f64], d: usize) -> Vec<f64> {
    let mut s = to_dmatrix(m, d);
    s = (&s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Symmetric positive square root of `−A²` for antisymmetric `A`, or of `A²`
/// for symmetric `A`; in both cases the matrix absolute value `|A|`.
pub fn matrix_abs(m: &[f64], d: usize) -> Vec<f64> {
    let a = to_dmatrix(m, d);
    let sq = a.transpose() * &a;
    let eig = SymmetricEigen::new(sq);
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            out[i * d + k] = root[(i, k)];
        }
    }
    out
}
