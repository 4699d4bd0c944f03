use serde::{Deserialize, Serialize};

use crate::CorrectorError;

/// Uniform periodic grid over `(t, x₁, …, x_d)`. Axis 0 is time and is the
/// slowest-varying index; the last spatial axis varies fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub periods: Vec<f64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, periods: Vec<f64>) -> Result<Self, CorrectorError> {
        if shape.len() < 2 || shape.len() != periods.len() {
            return Err(CorrectorError::GridMismatch(format!(
                "need one time and at least one space axis with matching periods, got shape {shape:?} and periods {periods:?}"
            )));
        }
        if shape[0] == 0 || shape[1..].iter().any(|&n| n < 2) {
            return Err(CorrectorError::GridMismatch(format!(
                "time axis needs >= 1 and space axes >= 2 points, got {shape:?}"
            )));
        }
        if periods.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(CorrectorError::GridMismatch(format!("periods must be positive, got {periods:?}")));
        }
        Ok(Self { shape, periods })
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.shape.len() - 1
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_t(&self) -> usize {
        self.shape[0]
    }

    /// Nodes in one time slice.
    pub fn slice_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.periods[axis] / self.shape[axis] as f64
    }

    pub fn steps(&self) -> Vec<f64> {
        (0..self.shape.len()).map(|a| self.step(a)).collect()
    }

    /// Linear-index stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for a in (0..self.shape.len() - 1).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.shape.len()).rev() {
            out[a] = idx % self.shape[a];
            idx /= self.shape[a];
        }
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&m, &n)| acc * n + m % n)
    }

    /// `(t, x)` of a node.
    pub fn node(&self, idx: usize) -> (f64, Vec<f64>) {
        let mut m = vec![0; self.shape.len()];
        self.multi_index(idx, &mut m);
        let t = m[0] as f64 * self.step(0);
        let x = (1..self.shape.len()).map(|a| m[a] as f64 * self.step(a)).collect();
        (t, x)
    }

    /// Neighbour of `idx` along `axis` with offset `±1`, wrapping around.
    pub fn shift(&self, idx: usize, axis: usize, forward: bool) -> usize {
        let strides = self.strides();
        let n = self.shape[axis];
        let pos = (idx / strides[axis]) % n;
        let new = if forward { (pos + 1) % n } else { (pos + n - 1) % n };
        idx - pos * strides[axis] + new * strides[axis]
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.shape == other.shape
            && self
                .periods
                .iter()
                .zip(&other.periods)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }
}

/// Scalar field on the nodes of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, &[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (t, x) = grid.node(i);
                f(t, &x)
            })
            .collect();
        Self { grid, values }
    }
}
