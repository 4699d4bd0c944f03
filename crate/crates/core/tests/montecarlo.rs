use std::f64::consts::TAU;
use std::sync::Arc;

use homog::effective::max_entry_distance;
use homog::medium::*;
use homog::montecarlo::*;
use homog::sde::NamedObservable;
use homog::{EstimateError, MediumError};

fn constant_family(sigma: Vec<f64>) -> MediumFamily {
    MediumFamily::from_field(Arc::new(ConstantMedium::new(sigma, None).unwrap()))
}

fn brownian_spec(n_paths: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec {
        n_paths,
        n_media: 1,
        epsilon: 1.0,
        macro_horizon: 1.0,
        observation_times: vec![0.5, 1.0],
        master_seed: seed,
        dt: 0.1,
        batches: 20,
        initial: InitialDistribution::Pi,
    }
}

fn within_ci(est: &McEstimate, truth: &[f64]) -> bool {
    est.a_hat
        .iter()
        .zip(&est.ci)
        .zip(truth)
        .all(|((a, c), t)| (a - t).abs() <= *c)
}

#[test]
fn identity_medium_recovers_identity() {
    let fam = constant_family(vec![1.0, 0.0, 0.0, 1.0]);
    let spec = EnsembleSpec {
        n_paths: 2000,
        epsilon: 0.1,
        dt: 0.01,
        ..brownian_spec(2000, 1)
    };
    let (eff, est, ens) = mc_diffusivity(&fam, &spec).unwrap();
    assert_eq!(ens.n_paths(), 2000);
    assert!(within_ci(&est, &[1.0, 0.0, 0.0, 1.0]), "{:?} ± {:?}", est.a_hat, est.ci);
    assert!(max_entry_distance(&eff.flat(), &[1.0, 0.0, 0.0, 1.0]) < 0.1);
    assert!(est.ci.iter().all(|&c| c > 0.0));
}

#[test]
fn diagonal_sigma_gives_its_square() {
    let fam = constant_family(vec![2.0, 0.0, 0.0, 1.0]);
    let (_, est, _) = mc_diffusivity(&fam, &brownian_spec(4000, 2)).unwrap();
    assert!(within_ci(&est, &[4.0, 0.0, 0.0, 1.0]), "{:?} ± {:?}", est.a_hat, est.ci);
}

#[test]
fn covariance_estimator_is_unbiased_on_brownian_input() {
    let fam = constant_family(vec![1.0]);
    let reps: Vec<f64> = (0..50)
        .map(|r| mc_diffusivity(&fam, &brownian_spec(200, 1000 + r)).unwrap().1.a_hat[0])
        .collect();
    let n = reps.len() as f64;
    let mean = reps.iter().sum::<f64>() / n;
    let sd = (reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 1.0).abs() <= sd / n.sqrt(), "mean {mean}, se {}", sd / n.sqrt());
}

#[test]
fn covariance_estimator_bias_is_below_resolution_of_many_repetitions() {
    let fam = constant_family(vec![1.0]);
    let reps: Vec<f64> = (0..2000)
        .map(|r| mc_diffusivity(&fam, &brownian_spec(200, 1000 + r)).unwrap().1.a_hat[0])
        .collect();
    let n = reps.len() as f64;
    let mean = reps.iter().sum::<f64>() / n;
    let sd = (reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 1.0).abs() <= 3.0 * sd / n.sqrt(), "mean {mean}, se {}", sd / n.sqrt());
}

#[test]
fn confidence_intervals_cover_the_truth() {
    let fam = constant_family(vec![1.0]);
    let covered = (0..100)
        .filter(|&r| {
            let (_, est, _) = mc_diffusivity(&fam, &brownian_spec(200, 5000 + r)).unwrap();
            within_ci(&est, &[1.0])
        })
        .count();
    assert!(covered >= 85, "{covered}/100");
}

#[test]
fn identical_specs_give_identical_reports_for_any_worker_count() {
    let spec: MediumSpec = serde_json::from_str(r#"{"kind": "chessboard", "p": 0.5, "extent": 256}"#).unwrap();
    let fam = MediumFamily::new(spec, 4).unwrap();
    let es = EnsembleSpec {
        n_paths: 50,
        n_media: 3,
        epsilon: 0.5,
        dt: 0.01,
        batches: 10,
        ..brownian_spec(50, 21)
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let (_, est, ens) = mc_diffusivity(&fam, &es).unwrap();
            let reference = Reference {
                a: est.a_hat.clone(),
                ci: est.ci.clone(),
            };
            let diag = gaussianity_diagnostics(&ens, &reference, 10).unwrap();
            homog::json::to_string(&(est, diag)).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn brownian_ensemble_passes_all_diagnostics() {
    let fam = constant_family(vec![1.0, 0.0, 0.0, 1.0]);
    let spec = EnsembleSpec {
        dt: 0.05,
        ..brownian_spec(10_000, 3)
    };
    let (_, _, ens) = mc_diffusivity(&fam, &spec).unwrap();
    let exact = Reference {
        a: vec![1.0, 0.0, 0.0, 1.0],
        ci: vec![0.0; 4],
    };
    let r = gaussianity_diagnostics(&ens, &exact, 20).unwrap();
    assert!(r.flags.gaussian, "{:?} {:?} {:?}", r.flags, r.excess_kurtosis, r.cross_covariance);
    assert!(r.covariances.iter().all(|c| c.ci.iter().all(|&h| h > 0.0)));
    assert_eq!(r.increment_correlation.len(), 4);
}

#[test]
fn deterministic_paths_are_flagged_non_gaussian() {
    let n = 200;
    let times = vec![0.5, 1.0];
    let ens = Ensemble {
        dim: 1,
        epsilon: 1.0,
        times: times.clone(),
        medium_index: vec![0; n],
        values: (0..n).flat_map(|_| times.iter().map(|t| 0.3 * t)).collect(),
        failed: 0,
        total: n,
    };
    let r = gaussianity_diagnostics(&ens, &Reference { a: vec![0.09], ci: vec![0.0] }, 10).unwrap();
    assert_eq!(r.excess_kurtosis, vec![None]);
    assert!(!r.flags.kurtosis && !r.flags.gaussian);
}

#[test]
fn too_small_ensembles_are_rejected() {
    let fam = constant_family(vec![1.0]);
    let err = mc_diffusivity(&fam, &brownian_spec(99, 0)).unwrap_err();
    assert!(matches!(err, EstimateError::InvalidSpec(_)));
    let mut bad = brownian_spec(200, 0);
    bad.observation_times = vec![1.0, 2.0];
    assert!(matches!(mc_diffusivity(&fam, &bad), Err(EstimateError::InvalidSpec(_))));
}

#[test]
fn run_aborts_when_paths_leave_the_medium() {
    let spec: MediumSpec = serde_json::from_str(r#"{"kind": "chessboard", "p": 1.0, "extent": 2}"#).unwrap();
    let fam = MediumFamily::new(spec, 1).unwrap();
    let es = EnsembleSpec {
        dt: 0.01,
        macro_horizon: 20.0,
        observation_times: vec![20.0],
        ..brownian_spec(200, 9)
    };
    match mc_diffusivity(&fam, &es) {
        Err(EstimateError::PathFailures { failed, total, first }) => {
            assert_eq!(total, 200);
            assert!(failed > 0);
            assert!(matches!(first, MediumError::OutOfExtent { .. }));
        }
        other => panic!("expected path failures, got {other:?}"),
    }
}

#[test]
fn constant_observable_has_zero_ergodic_error() {
    let fam = constant_family(vec![1.0, 0.0, 0.0, 1.0]);
    let spec = ErgodicSpec {
        n_paths: 40,
        n_media: 1,
        master_seed: 1,
        dt: 0.1,
        times: vec![1.0, 10.0, 100.0],
        batches: 10,
        reference: None,
    };
    let c = ergodic_average(&fam, &NamedObservable::Constant { value: 2.5 }, &spec).unwrap();
    assert!((c.reference - 2.5).abs() < 1e-12);
    assert!(c.errors.iter().all(|&e| e < 1e-12), "{:?}", c.errors);
}

#[test]
fn sine_average_decays_at_the_clt_rate() {
    let fam = constant_family(vec![1.0, 0.0, 0.0, 1.0]);
    let spec = ErgodicSpec {
        n_paths: 400,
        n_media: 1,
        master_seed: 5,
        dt: 0.05,
        times: vec![10.0, 40.0, 160.0, 640.0],
        batches: 20,
        reference: None,
    };
    let c = ergodic_average(&fam, &NamedObservable::Sin { i: 1 }, &spec).unwrap();
    assert!(c.reference.abs() < 1e-12);
    let slope = c.slope.unwrap();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}, errors {:?}", c.errors);
    assert!(c.decreasing);
}

#[test]
fn stationary_mean_matches_weighted_quadrature() {
    // π(a) = ∫ a e^{−2V} / ∫ e^{−2V} with a = 1 + ½ sin x, V = ½ cos x.
    let layered = Arc::new(LayeredMedium::new(1.0, 0.5, 0.5).unwrap());
    let q = 200_000;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..q {
        let x = TAU * k as f64 / q as f64;
        let w = (-x.cos()).exp();
        num += (1.0 + 0.5 * x.sin()) * w;
        den += w;
    }
    let got = periodic_mean(&MediumInstance::new(layered), &NamedObservable::A { i: 1, j: 1 }).unwrap();
    assert!((got - num / den).abs() < 1e-10, "{got} vs {}", num / den);
}

#[test]
fn periodic_a11_mean_is_the_squared_profile_average() {
    // a₁₁ = (1 − cos x)²(1 − cos y)², whose cell mean is (3/2)².
    let m = MediumInstance::new(Arc::new(make_periodic_medium(1.0, UField::Identity).unwrap()));
    let got = periodic_mean(&m, &NamedObservable::A { i: 1, j: 1 }).unwrap();
    assert!((got - 2.25).abs() < 1e-9, "{got}");
}

#[test]
fn chessboard_dispersion_shrinks_with_epsilon() {
    let spec: MediumSpec = serde_json::from_str(r#"{"kind": "chessboard", "p": 0.5}"#).unwrap();
    let fam = MediumFamily::new(spec, 3).unwrap();
    let es = EnsembleSpec {
        n_paths: 100,
        n_media: 8,
        epsilon: 0.2,
        dt: 0.01,
        batches: 10,
        ..brownian_spec(100, 7)
    };
    let r = dispersion_study(&fam, &es, &[0.05, 0.2, 0.1]).unwrap();
    let eps: Vec<f64> = r.points.iter().map(|p| p.epsilon).collect();
    assert_eq!(eps, vec![0.2, 0.1, 0.05]);
    assert!(r.points.iter().all(|p| p.per_medium.len() == 8));
    assert!(r.decreasing, "{:?}", r.points.iter().map(|p| p.dispersion).collect::<Vec<_>>());
}
