use std::f64::consts::TAU;
use std::sync::Arc;

use homog::corrector::{
    delta_continuation, discrete_norms, extrapolate_gradient, grid_for, h_minus_one_functional, h_minus_one_norm,
    run_cell_problem, solve_corrector, CellProblem, CorrectorConfig, GridFunction, OperatorParams, SolverOptions,
};
use homog::medium::{make_periodic_medium, ConstantMedium, LayeredMedium, MediumInstance, UField};

/// Periodic trapezoid rule; spectrally accurate for smooth periodic integrands.
fn periodic_quadrature(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    (0..n).map(|k| f(k as f64 * h)).sum::<f64>() * h
}

fn layered(mean: f64, amp: f64, pot: f64) -> MediumInstance {
    MediumInstance::new(Arc::new(LayeredMedium::new(mean, amp, pot).unwrap()))
}

#[test]
fn harmonic_mean_oracle_in_one_dimension() {
    let oracle = TAU / periodic_quadrature(|x| 1.0 / (1.0 + 0.5 * x.sin()), 20_000);
    assert!((oracle - 3f64.sqrt() / 2.0).abs() < 1e-12);
    let (_, run) = run_cell_problem(&layered(1.0, 0.5, 0.0), &CorrectorConfig::new(vec![1, 256])).unwrap();
    let a = run.effective.entry(0, 0);
    assert!(((a - oracle) / oracle).abs() < 1e-4, "A = {a}, oracle {oracle}");
    assert!(run.energy_holds());
}

#[test]
fn potential_oracle_in_one_dimension() {
    let i_plus = periodic_quadrature(|x| (x.cos()).exp(), 20_000);
    let i_minus = periodic_quadrature(|x| (-x.cos()).exp(), 20_000);
    let oracle = TAU * TAU / (i_plus * i_minus);
    let (_, run) = run_cell_problem(&layered(1.0, 0.0, 0.5), &CorrectorConfig::new(vec![1, 256])).unwrap();
    let a = run.effective.entry(0, 0);
    assert!(((a - oracle) / oracle).abs() < 1e-4, "A = {a}, oracle {oracle}");
}

#[test]
fn extrapolated_flux_matches_classical_corrector() {
    let m = layered(1.0, 0.5, 0.0);
    let grid = grid_for(&m, &[1, 256]).unwrap();
    let p = CellProblem::new(&m, grid).unwrap();
    let opts = SolverOptions::default();
    let mut sols = Vec::new();
    for lambda in [1e-2, 1e-3, 1e-4] {
        sols.push(solve_corrector(&p, 0, &OperatorParams::new(lambda, 0.0, 0.0), &opts, None).unwrap());
    }
    let ex = extrapolate_gradient(&p, &sols).unwrap();
    let c = TAU / periodic_quadrature(|x| 1.0 / (1.0 + 0.5 * x.sin()), 20_000);
    let h = TAU / 256.0;
    for cell in 0..256 {
        let x = (cell as f64 + 0.5) * h;
        let a = 1.0 + 0.5 * x.sin();
        let sigma = a.sqrt();
        // σ(1 + u') = c/σ, so ξ = σu' = c/σ − σ
        let want = c / sigma - sigma;
        for corner in 0..2 {
            let got = ex.xi.values[cell * 2 + corner];
            assert!((got - want).abs() < 1e-4, "cell {cell}: {got} vs {want}");
        }
    }
}

#[test]
fn h_minus_one_norm_of_sine_is_one() {
    let m = MediumInstance::new(Arc::new(ConstantMedium::identity(1)));
    let grid = grid_for(&m, &[1, 512]).unwrap();
    let p = CellProblem::new(&m, grid.clone()).unwrap();
    let h = GridFunction::from_fn(grid.clone(), |_, x| x[0].sin());
    let n = h_minus_one_norm(&p, &h, &SolverOptions::default()).unwrap();
    assert!((n - 1.0).abs() < 1e-4, "{n}");
    let h3 = GridFunction::from_fn(grid.clone(), |_, x| -3.0 * x[0].sin());
    let n3 = h_minus_one_norm(&p, &h3, &SolverOptions::default()).unwrap();
    assert!((n3 - 3.0 * n).abs() < 1e-9);
    let zero = GridFunction::zeros(grid.clone());
    assert_eq!(h_minus_one_norm(&p, &zero, &SolverOptions::default()).unwrap(), 0.0);
    let shifted = GridFunction::from_fn(grid, |_, x| x[0].sin() + 0.1);
    assert!(h_minus_one_norm(&p, &shifted, &SolverOptions::default()).is_err());
}

#[test]
fn sine_has_quarter_h1_energy() {
    let m = MediumInstance::new(Arc::new(ConstantMedium::identity(2)));
    let grid = grid_for(&m, &[1, 128, 64]).unwrap();
    let p = CellProblem::new(&m, grid.clone()).unwrap();
    let u = GridFunction::from_fn(grid.clone(), |_, x| x[0].sin());
    let (l2, h1) = discrete_norms(&p, &u).unwrap();
    assert!((h1 * h1 - 0.25).abs() < 1e-3, "{h1}");
    assert!((l2 * l2 - 0.5).abs() < 1e-12);
    let shifted = GridFunction::from_fn(grid, |_, x| x[0].sin() + 7.0);
    let (_, h1s) = discrete_norms(&p, &shifted).unwrap();
    assert!((h1s - h1).abs() < 1e-12);
}

#[test]
fn drift_duality_bound_on_periodic_medium() {
    let m = MediumInstance::new(Arc::new(make_periodic_medium(1.0, UField::Identity).unwrap()));
    let grid = grid_for(&m, &[1, 32, 32]).unwrap();
    let p = CellProblem::new(&m, grid).unwrap();
    let c = *p.constants();
    for i in 0..2 {
        let f = p.drift_functional(i);
        let norm = h_minus_one_functional(&p, &f, &SolverOptions::default()).unwrap();
        let gram: f64 = (0..p.len())
            .map(|cell| p.cell_weights()[cell] * p.cell_a_tilde(cell)[i * 2 + i])
            .sum();
        let bound = (c.big_m + c.c1_h) * gram.sqrt();
        assert!(norm.is_finite() && norm <= 1.05 * bound, "{norm} > {bound}");
    }
}

#[test]
fn continuation_differences_decrease_on_time_dependent_medium() {
    let m = MediumInstance::new(Arc::new(make_periodic_medium(4.0, UField::Stretch { amplitude: 0.5 }).unwrap()));
    let grid = grid_for(&m, &[8, 16, 16]).unwrap();
    let p = CellProblem::new(&m, grid).unwrap();
    let (sol, rep) = delta_continuation(&p, 0, 1e-2, 1.0, &[0.1, 0.025, 0.00625, 0.0015625], &SolverOptions::default())
        .unwrap();
    assert!(rep.monotone, "{rep:?}");
    assert!(rep.energy_holds);
    assert_eq!(sol.delta, 0.0);
}

mod weak_form {
    use super::*;
    use homog::medium::MediumSpec;
    use proptest::prelude::*;

    fn periodized_chessboard() -> CellProblem {
        let spec: MediumSpec =
            serde_json::from_str(r#"{"kind": "chessboard", "p": 0.5, "period": 3, "stretch": 0.3}"#).unwrap();
        let m = spec.instance(8).unwrap();
        CellProblem::new(&m, grid_for(&m, &[6, 6, 9]).unwrap()).unwrap()
    }

    fn vector(seed: u64, n: usize) -> Vec<f64> {
        use rand::Rng;
        let mut rng = homog::rng::uniform_rng(seed, 0);
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn strong_operator_represents_the_bilinear_form(
            s1 in any::<u64>(), s2 in any::<u64>(),
            lambda in 1e-4f64..1.0, delta in 0.0f64..0.5, theta in 0.0f64..1.0,
        ) {
            let p = periodized_chessboard();
            let (phi, psi) = (vector(s1, p.len()), vector(s2, p.len()));
            let params = OperatorParams::new(lambda, delta, theta);
            let mut y = vec![0.0; p.len()];
            p.apply(&params, &phi, &mut y);
            let lhs = p.weighted_dot(&y, &psi);
            let rhs = p.bilinear(&params, &phi, &psi);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }

        #[test]
        fn stream_and_time_terms_carry_no_energy(s in any::<u64>(), lambda in 1e-4f64..1.0) {
            let p = periodized_chessboard();
            let phi = vector(s, p.len());
            let b = p.bilinear(&OperatorParams::new(lambda, 0.0, 1.0), &phi, &phi);
            let expected = lambda * p.weighted_dot(&phi, &phi) + p.a_energy(&phi);
            prop_assert!((b - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{b} vs {expected}");
        }
    }
}
