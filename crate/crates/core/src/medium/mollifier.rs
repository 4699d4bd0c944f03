//! Compactly supported smooth bump used to mollify the stripe processes.

use serde::{Deserialize, Serialize};

use crate::MediumError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `exp(−1/(1 − (z/r)²))` on `|z| < r`.
    #[default]
    Standard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSpec {
    pub support_radius: f64,
    #[serde(default)]
    pub profile: BumpProfile,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self {
            support_radius: 0.25,
            profile: BumpProfile::Standard,
        }
    }
}

// 5-point Gauss–Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

const TABLE_INTERVALS: usize = 4096;

/// Unit-mass bump with a tabulated antiderivative.
///
/// The antiderivative `Φ` is stored at uniform nodes and interpolated with
/// cubic Hermite polynomials whose slopes are the exact density, so both `Φ`
/// and `Φ' = φ` are smooth and accurate to roughly machine precision.
#[derive(Clone, Debug)]
pub struct Mollifier {
    spec: MollifierSpec,
    norm: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl Mollifier {
    pub fn new(spec: MollifierSpec) -> Result<Self, MediumError> {
        let r = spec.support_radius;
        if !(r > 0.0 && r <= 0.25) {
            return Err(MediumError::InvalidParameter(format!(
                "mollifier support radius must lie in (0, 1/4], got {r}"
            )));
        }
        let step = 2.0 * r / TABLE_INTERVALS as f64;
        let raw = |z: f64| bump(z / r);
        let mut cdf = Vec::with_capacity(TABLE_INTERVALS + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for k in 0..TABLE_INTERVALS {
            let lo = -r + k as f64 * step;
            let mid = lo + 0.5 * step;
            let piece: f64 = GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(x, w)| w * raw(mid + 0.5 * step * x))
                .sum();
            acc += 0.5 * step * piece;
            cdf.push(acc);
        }
        let norm = 1.0 / acc;
        for v in cdf.iter_mut() {
            *v *= norm;
        }
        Ok(Self {
            spec,
            norm,
            step,
            cdf,
        })
    }

    pub fn spec(&self) -> MollifierSpec {
        self.spec
    }

    pub fn radius(&self) -> f64 {
        self.spec.support_radius
    }

    /// Density `φ(z)`.
    #[inline]
    pub fn density(&self, z: f64) -> f64 {
        self.norm * bump(z / self.spec.support_radius)
    }

    /// `Φ(z) = ∫_{−∞}^{z} φ`.
    pub fn cdf(&self, z: f64) -> f64 {
        let r = self.spec.support_radius;
        if z <= -r {
            return 0.0;
        }
        if z >= r {
            return 1.0;
        }
        let pos = (z + r) / self.step;
        let k = (pos.floor() as usize).min(TABLE_INTERVALS - 1);
        let s = pos - k as f64;
        let z0 = -r + k as f64 * self.step;
        let z1 = z0 + self.step;
        let (p0, p1) = (self.cdf[k], self.cdf[k + 1]);
        let (m0, m1) = (self.density(z0) * self.step, self.density(z1) * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1
    }

    pub fn max_density(&self) -> f64 {
        self.density(0.0)
    }
}

/// Unnormalized standard bump on the unit interval.
#[inline]
fn bump(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_mass_is_one_and_support_is_compact() {
        let m = Mollifier::new(MollifierSpec::default()).unwrap();
        assert_eq!(m.density(0.25), 0.0);
        assert_eq!(m.density(-0.3), 0.0);
        assert!((m.cdf(0.25) - 1.0).abs() < 1e-15);
        // independent composite Simpson on a fine mesh
        let n = 20_000;
        let h = 0.5 / n as f64;
        let mut s = m.density(-0.25) + m.density(0.25);
        for k in 1..n {
            let z = -0.25 + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * m.density(z);
        }
        assert!((s * h / 3.0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cdf_is_symmetric() {
        let m = Mollifier::new(MollifierSpec {
            support_radius: 0.1,
            profile: BumpProfile::Standard,
        })
        .unwrap();
        for z in [0.0, 0.013, 0.05, 0.0999] {
            assert!((m.cdf(z) + m.cdf(-z) - 1.0).abs() < 1e-13, "z={z}");
        }
    }

    #[test]
    fn radius_outside_range_is_rejected() {
        for r in [0.0, -0.1, 0.3] {
            assert!(Mollifier::new(MollifierSpec {
                support_radius: r,
                profile: BumpProfile::Standard
            })
            .is_err());
        }
    }
}
