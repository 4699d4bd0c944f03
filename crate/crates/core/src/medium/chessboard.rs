//! Random medium built from mollified, randomly shifted Bernoulli stripes.
//!
//! Three independent stripe processes `β_t`, `α¹_{x₁}`, `α²_{x₂}` are drawn.
//! Each one colors the unit cells `[k, k+1)` with i.i.d. Bernoulli(p)
//! variables, shifts the origin by a uniform `U ∈ [0, 1)` and convolves with
//! a unit-mass bump. The convolution of the piecewise-constant stripe with
//! the bump is evaluated through the bump's antiderivative `Φ`:
//!
//! `η(x) = Σ_k ε_k [Φ(x + U − k) − Φ(x + U − k − 1)]`,
//! `η'(x) = Σ_k ε_k [φ(x + U − k) − φ(x + U − k − 1)]`.
//!
//! The medium is `σ̃ = diag(1, α¹)`, `σ = σ̃ U` with
//! `U = diag(1 + κ α², 1)`, `V = 0` and
//! `H = [[0, (α¹)² β], [−(α¹)² β, 0]]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::{CoefficientField, ControlConstants, Periodicity, PointSample};
use super::mollifier::{Mollifier, MollifierSpec};
use crate::rng::uniform_rng;
use crate::MediumError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChessboardParams {
    pub p: f64,
    #[serde(default)]
    pub mollifier: MollifierSpec,
    pub seed: u64,
    /// Cells are sampled on `[-extent, extent)` along every axis.
    #[serde(default = "default_extent")]
    pub extent: usize,
    /// When set, colors repeat with this period (torus approximation used by
    /// the cell problem); `extent` is then ignored.
    #[serde(default)]
    pub period: Option<usize>,
    /// κ in `U = diag(1 + κ α², 1)`.
    #[serde(default)]
    pub stretch: f64,
}

fn default_extent() -> usize {
    1024
}

/// One sampled stripe process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripeProcess {
    pub first_index: i64,
    pub colors: Vec<u8>,
    pub shift: f64,
    pub periodic: bool,
}

impl StripeProcess {
    pub fn sample<R: Rng>(rng: &mut R, p: f64, first_index: i64, len: usize, periodic: bool) -> Self {
        let shift = rng.random::<f64>();
        let colors = (0..len).map(|_| u8::from(rng.random::<f64>() < p)).collect();
        Self {
            first_index,
            colors,
            shift,
            periodic,
        }
    }

    pub fn color(&self, k: i64) -> Option<u8> {
        let len = self.colors.len() as i64;
        let off = k - self.first_index;
        if self.periodic {
            Some(self.colors[off.rem_euclid(len) as usize])
        } else if (0..len).contains(&off) {
            Some(self.colors[off as usize])
        } else {
            None
        }
    }

    /// Unmollified shifted stripe `η̄(y) = ε_{⌊y + U⌋}`.
    pub fn raw(&self, y: f64) -> Option<u8> {
        self.color((y + self.shift).floor() as i64)
    }

    /// Admissible coordinate range for evaluation.
    pub fn domain(&self, radius: f64) -> (f64, f64) {
        if self.periodic {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let lo = self.first_index as f64 - self.shift + radius;
        let hi = (self.first_index + self.colors.len() as i64) as f64 - self.shift - radius;
        (lo, hi)
    }

    /// `(η(x), η'(x))`.
    pub fn eval(&self, x: f64, moll: &Mollifier, coordinate: &'static str) -> Result<(f64, f64), MediumError> {
        let r = moll.radius();
        let s = x + self.shift;
        let k_lo = (s - 1.0 - r).floor() as i64 + 1;
        let k_hi = (s + r).ceil() as i64 - 1;
        let (mut value, mut slope) = (0.0, 0.0);
        for k in k_lo..=k_hi {
            let Some(eps) = self.color(k) else {
                let (lo, hi) = self.domain(r);
                return Err(MediumError::OutOfExtent {
                    coordinate,
                    value: x,
                    lo,
                    hi,
                });
            };
            if eps == 0 {
                continue;
            }
            let z = s - k as f64;
            value += moll.cdf(z) - moll.cdf(z - 1.0);
            slope += moll.density(z) - moll.density(z - 1.0);
        }
        Ok((value, slope))
    }

    pub fn mean_color(&self) -> f64 {
        self.colors.iter().map(|&c| c as f64).sum::<f64>() / self.colors.len() as f64
    }
}

/// Sampled randomness of a chessboard medium, as persisted to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChessboardRecord {
    pub params: ChessboardParams,
    /// Uniform origin shifts of `α¹` and `α²`.
    pub shift: [f64; 2],
    /// Uniform origin shift of `β`.
    pub time_shift: f64,
    pub first_index: i64,
    pub colors: ChessboardColors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChessboardColors {
    pub beta: Vec<u8>,
    pub alpha1: Vec<u8>,
    pub alpha2: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct ChessboardMedium {
    params: ChessboardParams,
    mollifier: Mollifier,
    beta: StripeProcess,
    alpha1: StripeProcess,
    alpha2: StripeProcess,
}

const STREAM_BETA: u64 = 0;
const STREAM_ALPHA1: u64 = 1;
const STREAM_ALPHA2: u64 = 2;

pub fn make_chessboard_medium(params: ChessboardParams) -> Result<ChessboardMedium, MediumError> {
    if !(0.0..=1.0).contains(&params.p) {
        return Err(MediumError::InvalidParameter(format!(
            "Bernoulli parameter must lie in [0, 1], got {}",
            params.p
        )));
    }
    if !(params.stretch >= 0.0 && params.stretch.is_finite()) {
        return Err(MediumError::InvalidParameter(format!(
            "stretch must be finite and nonnegative, got {}",
            params.stretch
        )));
    }
    let mollifier = Mollifier::new(params.mollifier)?;
    let (first, len, periodic) = match params.period {
        Some(0) => return Err(MediumError::InvalidParameter("period must be positive".into())),
        Some(n) => (0, n, true),
        None if params.extent == 0 => {
            return Err(MediumError::InvalidParameter("extent must be positive".into()))
        }
        None => (-(params.extent as i64), 2 * params.extent, false),
    };
    let draw = |stream| {
        let mut rng = uniform_rng(params.seed, stream);
        StripeProcess::sample(&mut rng, params.p, first, len, periodic)
    };
    Ok(ChessboardMedium {
        beta: draw(STREAM_BETA),
        alpha1: draw(STREAM_ALPHA1),
        alpha2: draw(STREAM_ALPHA2),
        params,
        mollifier,
    })
}

impl ChessboardMedium {
    pub fn from_record(record: ChessboardRecord) -> Result<Self, MediumError> {
        let mollifier = Mollifier::new(record.params.mollifier)?;
        let periodic = record.params.period.is_some();
        let lens = [
            record.colors.beta.len(),
            record.colors.alpha1.len(),
            record.colors.alpha2.len(),
        ];
        if lens.iter().any(|&l| l == 0 || l != lens[0]) {
            return Err(MediumError::InvalidParameter(format!(
                "color arrays must be nonempty and of equal length, got {lens:?}"
            )));
        }
        let all = record
            .colors
            .beta
            .iter()
            .chain(&record.colors.alpha1)
            .chain(&record.colors.alpha2);
        if all.clone().any(|&c| c > 1) {
            return Err(MediumError::InvalidParameter("colors must be 0 or 1".into()));
        }
        let stripe = |colors: Vec<u8>, shift: f64| StripeProcess {
            first_index: record.first_index,
            colors,
            shift,
            periodic,
        };
        Ok(Self {
            beta: stripe(record.colors.beta, record.time_shift),
            alpha1: stripe(record.colors.alpha1, record.shift[0]),
            alpha2: stripe(record.colors.alpha2, record.shift[1]),
            params: record.params,
            mollifier,
        })
    }

    pub fn record(&self) -> ChessboardRecord {
        ChessboardRecord {
            params: self.params.clone(),
            shift: [self.alpha1.shift, self.alpha2.shift],
            time_shift: self.beta.shift,
            first_index: self.alpha1.first_index,
            colors: ChessboardColors {
                beta: self.beta.colors.clone(),
                alpha1: self.alpha1.colors.clone(),
                alpha2: self.alpha2.colors.clone(),
            },
        }
    }

    pub fn params(&self) -> &ChessboardParams {
        &self.params
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn beta(&self) -> &StripeProcess {
        &self.beta
    }

    pub fn alpha1(&self) -> &StripeProcess {
        &self.alpha1
    }

    pub fn alpha2(&self) -> &StripeProcess {
        &self.alpha2
    }

    /// Replace all colors by a constant (diagnostic media).
    pub fn with_constant_colors(mut self, color: u8) -> Self {
        for s in [&mut self.beta, &mut self.alpha1, &mut self.alpha2] {
            s.colors.iter_mut().for_each(|c| *c = color);
        }
        self
    }
}

impl CoefficientField for ChessboardMedium {
    fn dim(&self) -> usize {
        2
    }

    fn bound(&self) -> f64 {
        let u = 1.0 + self.params.stretch;
        (u * u).max(self.mollifier.max_density()).max(1.0)
    }

    fn periodicity(&self) -> Periodicity {
        match self.params.period {
            Some(n) => Periodicity::Periodic {
                time: n as f64,
                space: vec![n as f64, n as f64],
                time_dependent: true,
            },
            None => Periodicity::StationaryRandom,
        }
    }

    fn control_constants(&self) -> ControlConstants {
        let u = 1.0 + self.params.stretch;
        ControlConstants {
            m: 1.0,
            big_m: u * u,
            c1_h: 1.0,
            c2_h: self.mollifier.max_density(),
            c2_a: 0.0,
        }
    }

    fn sample(&self, t: f64, x: &[f64], out: &mut PointSample) -> Result<(), MediumError> {
        let (beta, dbeta) = self.beta.eval(t, &self.mollifier, "t")?;
        let (al, dal) = self.alpha1.eval(x[0], &self.mollifier, "x1")?;
        let (ga, dga) = self.alpha2.eval(x[1], &self.mollifier, "x2")?;
        let kappa = self.params.stretch;
        let u1 = 1.0 + kappa * ga;
        let al2 = al * al;
        let h12 = al2 * beta;

        out.sigma.copy_from_slice(&[u1, 0.0, 0.0, al]);
        out.sigma_tilde.copy_from_slice(&[1.0, 0.0, 0.0, al]);
        out.a.copy_from_slice(&[u1 * u1, 0.0, 0.0, al2]);
        out.a_tilde.copy_from_slice(&[1.0, 0.0, 0.0, al2]);
        out.h.copy_from_slice(&[0.0, h12, -h12, 0.0]);
        out.v = 0.0;
        out.dv.fill(0.0);
        let dal2 = 2.0 * al * dal;
        // D_1
        out.da[0..4].copy_from_slice(&[0.0, 0.0, 0.0, dal2]);
        out.da_tilde[0..4].copy_from_slice(&[0.0, 0.0, 0.0, dal2]);
        out.dh[0..4].copy_from_slice(&[0.0, dal2 * beta, -dal2 * beta, 0.0]);
        // D_2
        out.da[4..8].copy_from_slice(&[2.0 * u1 * kappa * dga, 0.0, 0.0, 0.0]);
        out.da_tilde[4..8].fill(0.0);
        out.dh[4..8].fill(0.0);
        out.dt_a.fill(0.0);
        let dth = al2 * dbeta;
        out.dt_h.copy_from_slice(&[0.0, dth, -dth, 0.0]);
        Ok(())
    }

    fn name(&self) -> String {
        format!(
            "chessboard(p={}, seed={}, r={})",
            self.params.p, self.params.seed, self.params.mollifier.support_radius
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> ChessboardParams {
        ChessboardParams {
            p,
            mollifier: MollifierSpec::default(),
            seed: 7,
            extent: 64,
            period: None,
            stretch: 0.0,
        }
    }

    #[test]
    fn all_black_gives_identity_sigma_tilde() {
        let m = make_chessboard_medium(params(0.5)).unwrap().with_constant_colors(1);
        let mut s = PointSample::new(2);
        for x in [-3.3, 0.0, 0.49, 10.2] {
            m.sample(1.7, &[x, 0.3 * x], &mut s).unwrap();
            assert!((s.sigma_tilde[3] - 1.0).abs() < 1e-14);
            assert_eq!(s.sigma_tilde[0], 1.0);
        }
    }

    #[test]
    fn all_white_degenerates_second_direction() {
        let m = make_chessboard_medium(params(0.5)).unwrap().with_constant_colors(0);
        let mut s = PointSample::new(2);
        m.sample(0.0, &[0.25, -1.0], &mut s).unwrap();
        assert_eq!(s.sigma_tilde, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn evaluation_outside_extent_fails() {
        let m = make_chessboard_medium(params(0.5)).unwrap();
        let mut s = PointSample::new(2);
        let err = m.sample(0.0, &[70.0, 0.0], &mut s).unwrap_err();
        assert!(matches!(err, MediumError::OutOfExtent { coordinate: "x1", .. }));
        assert!(m.sample(100.0, &[0.0, 0.0], &mut s).is_err());
    }

    #[test]
    fn deep_inside_a_black_stripe_is_exactly_one() {
        let m = make_chessboard_medium(params(0.5)).unwrap();
        let a1 = m.alpha1();
        let r = m.mollifier().radius();
        // first black cell whose neighbours are irrelevant at its centre
        let k = (0..a1.colors.len()).find(|&k| a1.colors[k] == 1).unwrap() as i64 + a1.first_index;
        let centre = k as f64 + 0.5 - a1.shift;
        assert!(0.5 > r);
        let (v, dv) = a1.eval(centre, m.mollifier(), "x1").unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(dv, 0.0);
    }

    #[test]
    fn record_round_trip_reproduces_field() {
        let m = make_chessboard_medium(params(0.3)).unwrap();
        let json = serde_json::to_string(&m.record()).unwrap();
        let back = ChessboardMedium::from_record(serde_json::from_str(&json).unwrap()).unwrap();
        let (mut s1, mut s2) = (PointSample::new(2), PointSample::new(2));
        m.sample(2.1, &[1.3, -4.2], &mut s1).unwrap();
        back.sample(2.1, &[1.3, -4.2], &mut s2).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn periodized_medium_repeats() {
        let mut p = params(0.5);
        p.period = Some(5);
        let m = make_chessboard_medium(p).unwrap();
        let (mut s1, mut s2) = (PointSample::new(2), PointSample::new(2));
        m.sample(0.4, &[1.1, 2.2], &mut s1).unwrap();
        m.sample(5.4, &[6.1, -2.8], &mut s2).unwrap();
        for k in 0..4 {
            assert!((s1.a[k] - s2.a[k]).abs() < 1e-12);
            assert!((s1.h[k] - s2.h[k]).abs() < 1e-12);
        }
    }
}
