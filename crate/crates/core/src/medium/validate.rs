//! Pointwise checks of the control assumption and the uniform bound `K`.
//!
//! Matrix inequalities `P ≤ Q` are checked in the quadratic-form sense on a
//! fixed set of unit directions, `vᵀ(Q − P)v ≥ −tol`, so `ã` is allowed to
//! degenerate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::drift::drift;
use super::field::{CoefficientField, ControlConstants, Periodicity, PointSample};
use crate::linalg::{matrix_abs, quad_form, sym_eigenvalues};
use crate::MediumError;

/// Margins below this are violations.
pub const MARGIN_TOLERANCE: f64 = 1e-10;

/// Side of the sampling box used for media without a periodic cell.
const RANDOM_BOX: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityMargin {
    pub name: String,
    /// `min vᵀ(Q − P)v` over points and directions.
    pub worst_margin: f64,
    /// `(t, x₁, …, x_d)` of the worst margin.
    pub at: Vec<f64>,
}

/// Smallest constants compatible with the sampled points. `None` marks a
/// ratio that is unbounded (e.g. `vᵀav > 0` where `vᵀãv = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleConstants {
    pub m: Option<f64>,
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    pub c1_h: Option<f64>,
    pub c2_h: Option<f64>,
    pub c2_a: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub constants: ControlConstants,
    pub margins: Vec<InequalityMargin>,
    pub admissible: AdmissibleConstants,
    pub min_eigenvalue_a: f64,
    pub points: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub declared: f64,
    pub observed: f64,
    pub points: usize,
    pub passed: bool,
}

/// Unit directions: coordinate axes, normalized `eᵢ ± eⱼ`, and for `d = 2`
/// an additional fan of 16 angles.
pub fn direction_set(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        dirs.push(v);
    }
    let s = 0.5f64.sqrt();
    for i in 0..d {
        for j in i + 1..d {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; d];
                v[i] = s;
                v[j] = sign * s;
                dirs.push(v);
            }
        }
    }
    if d == 2 {
        for k in 0..16 {
            let th = PI * (k as f64 + 0.5) / 16.0;
            dirs.push(vec![th.cos(), th.sin()]);
        }
    }
    dirs
}

fn sampling_box(field: &dyn CoefficientField) -> (f64, Vec<f64>) {
    match field.periodicity() {
        Periodicity::Periodic { time, space, .. } => (time, space),
        Periodicity::StationaryRandom => (RANDOM_BOX, vec![RANDOM_BOX; field.dim()]),
    }
}

/// Visit every node of a `resolution^(1+d)` grid on the cell (or sampling box).
fn for_each_point(
    field: &dyn CoefficientField,
    resolution: usize,
    mut f: impl FnMut(&[f64], &PointSample),
) -> Result<usize, MediumError> {
    if resolution < 2 {
        return Err(MediumError::InvalidParameter(format!(
            "validation grid needs at least 2 points per axis, got {resolution}"
        )));
    }
    let d = field.dim();
    let (tp, xp) = sampling_box(field);
    let mut periods = vec![tp];
    periods.extend(xp);
    let total = resolution.pow(d as u32 + 1);
    let mut point = vec![0.0; d + 1];
    let mut s = PointSample::new(d);
    for idx in 0..total {
        let mut rem = idx;
        for (p, per) in point.iter_mut().zip(&periods) {
            *p = per * (rem % resolution) as f64 / resolution as f64;
            rem /= resolution;
        }
        field.sample(point[0], &point[1..], &mut s)?;
        f(&point, &s);
    }
    Ok(total)
}

struct Tracker {
    name: &'static str,
    worst: f64,
    at: Vec<f64>,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: f64::INFINITY,
            at: Vec::new(),
        }
    }

    fn update(&mut self, margin: f64, point: &[f64]) {
        if margin < self.worst {
            self.worst = margin;
            self.at = point.to_vec();
        }
    }

    fn finish(self) -> InequalityMargin {
        InequalityMargin {
            name: self.name.to_string(),
            worst_margin: self.worst,
            at: self.at,
        }
    }
}

/// Running extremum of `num / den`; `den ≈ 0` with `num > 0` makes it unbounded.
struct Ratio {
    value: f64,
    unbounded: bool,
    maximize: bool,
}

const RATIO_FLOOR: f64 = 1e-12;

impl Ratio {
    fn new(maximize: bool) -> Self {
        Self {
            value: if maximize { 0.0 } else { f64::INFINITY },
            unbounded: false,
            maximize,
        }
    }

    fn update(&mut self, num: f64, den: f64) {
        if den <= RATIO_FLOOR {
            if self.maximize && num > RATIO_FLOOR {
                self.unbounded = true;
            }
            return;
        }
        let r = num / den;
        self.value = if self.maximize { self.value.max(r) } else { self.value.min(r) };
    }

    fn get(&self) -> Option<f64> {
        (!self.unbounded && self.value.is_finite()).then_some(self.value)
    }
}

pub fn validate_control(
    field: &dyn CoefficientField,
    constants: &ControlConstants,
    resolution: usize,
) -> Result<ControlReport, MediumError> {
    let d = field.dim();
    let dirs = direction_set(d);
    let mut lower = Tracker::new("m*a_tilde <= a");
    let mut upper = Tracker::new("a <= M*a_tilde");
    let mut hb = Tracker::new("|H| <= C1_H*a_tilde");
    let mut dth = Tracker::new("|D_t H| <= C2_H*a_tilde");
    let mut dta = Tracker::new("|D_t a| <= C2_a*a_tilde");
    let (mut r_m, mut r_big_m) = (Ratio::new(false), Ratio::new(true));
    let (mut r_h, mut r_dth, mut r_dta) = (Ratio::new(true), Ratio::new(true), Ratio::new(true));
    let mut min_eig = f64::INFINITY;

    let points = for_each_point(field, resolution, |p, s| {
        let abs_h = matrix_abs(&s.h, d);
        let abs_dth = matrix_abs(&s.dt_h, d);
        let abs_dta = matrix_abs(&s.dt_a, d);
        min_eig = min_eig.min(sym_eigenvalues(&s.a, d)[0]);
        for v in &dirs {
            let qa = quad_form(&s.a, v, d);
            let qt = quad_form(&s.a_tilde, v, d);
            let qh = quad_form(&abs_h, v, d);
            let qdth = quad_form(&abs_dth, v, d);
            let qdta = quad_form(&abs_dta, v, d);
            lower.update(qa - constants.m * qt, p);
            upper.update(constants.big_m * qt - qa, p);
            hb.update(constants.c1_h * qt - qh, p);
            dth.update(constants.c2_h * qt - qdth, p);
            dta.update(constants.c2_a * qt - qdta, p);
            r_m.update(qa, qt);
            r_big_m.update(qa, qt);
            r_h.update(qh, qt);
            r_dth.update(qdth, qt);
            r_dta.update(qdta, qt);
        }
    })?;

    let margins: Vec<_> = [lower, upper, hb, dth, dta].into_iter().map(Tracker::finish).collect();
    let passed = margins.iter().all(|m| m.worst_margin >= -MARGIN_TOLERANCE);
    Ok(ControlReport {
        constants: *constants,
        margins,
        admissible: AdmissibleConstants {
            m: r_m.get(),
            big_m: r_big_m.get(),
            c1_h: r_h.get(),
            c2_h: r_dth.get(),
            c2_a: r_dta.get(),
        },
        min_eigenvalue_a: min_eig,
        points,
        passed,
    })
}

/// Largest entry of σ, σ̃, a, H, b and |V| over the grid, compared with `K`.
pub fn check_bound(field: &dyn CoefficientField, resolution: usize) -> Result<BoundReport, MediumError> {
    let d = field.dim();
    let mut b = vec![0.0; d];
    let mut observed: f64 = 0.0;
    let points = for_each_point(field, resolution, |_, s| {
        drift(s, &mut b);
        let entries = s
            .sigma
            .iter()
            .chain(&s.sigma_tilde)
            .chain(&s.a)
            .chain(&s.h)
            .chain(&b)
            .chain(std::iter::once(&s.v));
        for x in entries {
            observed = observed.max(x.abs());
        }
    })?;
    let declared = field.bound();
    Ok(BoundReport {
        declared,
        observed,
        points,
        passed: observed <= declared * (1.0 + 1e-12),
    })
}
