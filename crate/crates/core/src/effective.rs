//! The effective diffusivity matrix and comparisons between estimates.

use serde::{Deserialize, Serialize};

use crate::linalg::sym_eigenvalues;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Corrector,
    MonteCarlo,
}

/// Symmetric `d × d` matrix `A` with per-entry half-widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDiffusivity {
    pub dim: usize,
    pub matrix: Vec<Vec<f64>>,
    pub method: Provenance,
    /// Confidence half-widths (Monte Carlo) or extrapolation differences
    /// (corrector), entry by entry.
    pub ci: Vec<Vec<f64>>,
    #[serde(default)]
    pub error_estimate: Option<f64>,
    pub eigenvalues: Vec<f64>,
}

fn rows(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks(d).map(<[f64]>::to_vec).collect()
}

impl EffectiveDiffusivity {
    pub fn new(dim: usize, matrix: Vec<f64>, ci: Vec<f64>, method: Provenance) -> Self {
        assert_eq!(matrix.len(), dim * dim);
        let mut sym = matrix.clone();
        for i in 0..dim {
            for j in 0..dim {
                sym[i * dim + j] = 0.5 * (matrix[i * dim + j] + matrix[j * dim + i]);
            }
        }
        Self {
            dim,
            eigenvalues: sym_eigenvalues(&sym, dim),
            matrix: rows(&sym, dim),
            method,
            ci: rows(&ci, dim),
            error_estimate: None,
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.matrix.concat()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| (self.matrix[i][j] - self.matrix[j][i]).abs() <= tol))
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|&e| e >= -tol)
    }
}

/// `‖A − B‖_F / ‖B‖_F` (with `B` the reference).
pub fn relative_frobenius(a: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = reference.iter().map(|y| y * y).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

pub fn max_entry_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_and_reports_spectrum() {
        let e = EffectiveDiffusivity::new(2, vec![2.0, 1.0, 0.0, 2.0], vec![0.0; 4], Provenance::Corrector);
        assert_eq!(e.matrix, vec![vec![2.0, 0.5], vec![0.5, 2.0]]);
        assert!((e.eigenvalues[0] - 1.5).abs() < 1e-14);
        assert!(e.is_symmetric(0.0) && e.is_psd(0.0));
    }

    #[test]
    fn frobenius_of_scaled_matrix() {
        let a = [1.0, 0.2, 0.2, 3.0];
        let b: Vec<f64> = a.iter().map(|x| 1.05 * x).collect();
        assert!((relative_frobenius(&b, &a) - 0.05).abs() < 1e-12);
        assert_eq!(relative_frobenius(&a, &a), 0.0);
    }
}
