//! Counter-based Gaussian streams.
//!
//! A stream is keyed by `(seed, stream)`; the variates consumed by step `n`
//! start at a fixed word offset `n × stride` of the ChaCha keystream, so any
//! step of any path can be regenerated without replaying its predecessors.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS_PER_PAIR: u128 = 4;

/// Tag OR-ed into the stream id of auxiliary noise (e.g. the extra
/// time-direction Brownian motion) so it never overlaps a path stream.
pub const AUX_STREAM: u64 = 1 << 63;

#[derive(Clone, Debug)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    per_step: usize,
    stride: u128,
    next_step: u64,
}

impl GaussianStream {
    /// `per_step` standard normals are produced for every step.
    pub fn new(seed: u64, stream: u64, per_step: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let pairs = per_step.div_ceil(2) as u128;
        Self {
            rng,
            per_step,
            stride: pairs * WORDS_PER_PAIR,
            next_step: 0,
        }
    }

    pub fn per_step(&self) -> usize {
        self.per_step
    }

    /// Fill `out` with the normals of step `step`.
    pub fn fill(&mut self, step: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.per_step);
        if step != self.next_step {
            self.rng.set_word_pos(step as u128 * self.stride);
        }
        let mut i = 0;
        while i < self.per_step {
            let (z0, z1) = self.pair();
            out[i] = z0;
            if i + 1 < self.per_step {
                out[i + 1] = z1;
            }
            i += 2;
        }
        self.next_step = step + 1;
    }

    fn pair(&mut self) -> (f64, f64) {
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform generator for auxiliary draws (medium colors, initial shifts).
pub fn uniform_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn uniform01<R: Rng>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential() {
        let mut seq = GaussianStream::new(42, 3, 3);
        let mut all = vec![[0.0; 3]; 10];
        for (n, row) in all.iter_mut().enumerate() {
            seq.fill(n as u64, row);
        }
        let mut jump = GaussianStream::new(42, 3, 3);
        let mut row = [0.0; 3];
        jump.fill(7, &mut row);
        assert_eq!(row, all[7]);
        jump.fill(2, &mut row);
        assert_eq!(row, all[2]);
        jump.fill(3, &mut row);
        assert_eq!(row, all[3]);
    }

    #[test]
    fn streams_differ() {
        let mut a = GaussianStream::new(1, 0, 2);
        let mut b = GaussianStream::new(1, 1, 2);
        let (mut x, mut y) = ([0.0; 2], [0.0; 2]);
        a.fill(0, &mut x);
        b.fill(0, &mut y);
        assert_ne!(x, y);
    }

    #[test]
    fn moments_are_standard_normal() {
        let mut s = GaussianStream::new(9, 0, 2);
        let n = 200_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        let mut z = [0.0; 2];
        for k in 0..n / 2 {
            s.fill(k as u64, &mut z);
            for v in z {
                m1 += v;
                m2 += v * v;
                m4 += v.powi(4);
            }
        }
        let nf = n as f64;
        assert!((m1 / nf).abs() < 0.01);
        assert!((m2 / nf - 1.0).abs() < 0.015);
        assert!((m4 / nf - 3.0).abs() < 0.1);
    }
}
