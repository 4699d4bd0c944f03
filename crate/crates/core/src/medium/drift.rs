//! Drift of the diffusion and of its control diffusion.
//!
//! `b_i = ½ e^{2V} Σ_j D_j(e^{−2V}[a + H]_ij)
//!      = Σ_j (½ D_j a_ij − a_ij D_j V + ½ D_j H_ij − H_ij D_j V)`.
//! The last term vanishes whenever `H ∇V = 0`; it is kept so that π stays
//! invariant for every admissible field.
//!
//! `b̃_i = Σ_j (½ D_j ã_ij − ã_ij D_j V)`.

use super::field::PointSample;

pub fn drift(s: &PointSample, out: &mut [f64]) {
    let d = s.dim;
    for (i, bi) in out.iter_mut().enumerate().take(d) {
        let mut acc = 0.0;
        for j in 0..d {
            let daij = PointSample::deriv(&s.da, d, j, i, j);
            let dhij = PointSample::deriv(&s.dh, d, j, i, j);
            acc += 0.5 * daij - s.a[i * d + j] * s.dv[j] + 0.5 * dhij - s.h[i * d + j] * s.dv[j];
        }
        *bi = acc;
    }
}

pub fn control_drift(s: &PointSample, out: &mut [f64]) {
    let d = s.dim;
    for (i, bi) in out.iter_mut().enumerate().take(d) {
        let mut acc = 0.0;
        for j in 0..d {
            acc += 0.5 * PointSample::deriv(&s.da_tilde, d, j, i, j) - s.a_tilde[i * d + j] * s.dv[j];
        }
        *bi = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficients_have_zero_drift() {
        let mut s = PointSample::new(2);
        s.a = vec![2.0, 0.3, 0.3, 1.0];
        s.h = vec![0.0, 0.5, -0.5, 0.0];
        let mut b = [1.0; 2];
        drift(&s, &mut b);
        assert_eq!(b, [0.0, 0.0]);
    }

    #[test]
    fn one_dimensional_specialization() {
        // b = a'/2 − a V'
        let mut s = PointSample::new(1);
        s.a = vec![1.5];
        s.da = vec![0.4];
        s.dv = vec![-0.2];
        let mut b = [0.0];
        drift(&s, &mut b);
        assert!((b[0] - (0.2 + 1.5 * 0.2)).abs() < 1e-15);
    }
}
