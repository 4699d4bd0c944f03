//! Portable persistence: a JSON header plus a CSV value dump.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridFunction};
use super::krylov::KrylovMethod;
use super::problem::CellProblem;
use super::solve::{CorrectorSolution, EnergyCheck};
use crate::json;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionHeader {
    pub medium: String,
    pub coordinate: usize,
    pub lambda: f64,
    pub delta: f64,
    pub theta: f64,
    pub shape: Vec<usize>,
    pub periods: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: KrylovMethod,
    pub l2: f64,
    pub h1_tilde: f64,
    pub energy: EnergyCheck,
    /// CSV file (relative to the header) with columns
    /// `t, x1..xd, u, gsu1..gsud`; `gsu` is `σᵀ∇u` averaged over the cell
    /// whose lower corner is the node.
    pub values: String,
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed solution file: {0}")]
    Format(String),
}

/// Write `<stem>.json` and `<stem>.csv` into `dir`; returns the header path.
pub fn write_solution(dir: &Path, stem: &str, problem: &CellProblem, sol: &CorrectorSolution) -> Result<PathBuf, IoError> {
    std::fs::create_dir_all(dir)?;
    let grid = problem.grid();
    let d = grid.dim();
    let nc = problem.corners_per_cell();
    let csv_name = format!("{stem}.csv");
    let mut w = csv::Writer::from_path(dir.join(&csv_name))?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    header.push("u".into());
    header.extend((1..=d).map(|j| format!("gsu{j}")));
    w.write_record(&header)?;
    let gs = sol.grad_sigma_u.as_ref();
    for n in 0..grid.len() {
        let (t, x) = grid.node(n);
        let mut row = vec![format!("{t:.16e}")];
        row.extend(x.iter().map(|v| format!("{v:.16e}")));
        row.push(format!("{:.16e}", sol.u.values[n]));
        for j in 0..d {
            let avg = gs.map_or(f64::NAN, |g| {
                (0..nc).map(|m| g.values[(n * nc + m) * d + j]).sum::<f64>() / nc as f64
            });
            row.push(format!("{avg:.16e}"));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    let head = SolutionHeader {
        medium: problem.medium_id().to_string(),
        coordinate: sol.coordinate,
        lambda: sol.lambda,
        delta: sol.delta,
        theta: sol.theta,
        shape: grid.shape.clone(),
        periods: grid.periods.clone(),
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
        method: sol.method,
        l2: sol.l2,
        h1_tilde: sol.h1_tilde,
        energy: sol.energy.clone(),
        values: csv_name,
    };
    let path = dir.join(format!("{stem}.json"));
    json::write_file(&path, &head)?;
    Ok(path)
}

/// Read a header written by [`write_solution`] and the `u` column.
pub fn read_solution(header_path: &Path) -> Result<(SolutionHeader, GridFunction), IoError> {
    let head: SolutionHeader = serde_json::from_str(&std::fs::read_to_string(header_path)?)?;
    let grid = Grid::new(head.shape.clone(), head.periods.clone()).map_err(|e| IoError::Format(e.to_string()))?;
    let dir = header_path.parent().unwrap_or(Path::new("."));
    let mut r = csv::Reader::from_path(dir.join(&head.values))?;
    let col = 1 + grid.dim();
    let mut values = Vec::with_capacity(grid.len());
    for rec in r.records() {
        let rec = rec?;
        let v = rec
            .get(col)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| IoError::Format(format!("bad u value in row {}", values.len())))?;
        values.push(v);
    }
    if values.len() != grid.len() {
        return Err(IoError::Format(format!("expected {} rows, got {}", grid.len(), values.len())));
    }
    Ok((head, GridFunction { grid, values }))
}
