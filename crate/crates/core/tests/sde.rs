use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use homog::medium::*;
use homog::montecarlo::{potential_floor, sample_initial_shift};
use homog::sde::*;
use homog::EstimateError;

fn constant(sigma: Vec<f64>) -> MediumInstance {
    MediumInstance::new(Arc::new(ConstantMedium::new(sigma, None).unwrap()))
}

fn chessboard_zero() -> MediumInstance {
    let m = make_chessboard_medium(ChessboardParams {
        p: 0.0,
        mollifier: MollifierSpec::default(),
        seed: 1,
        extent: 256,
        period: None,
        stretch: 0.0,
    })
    .unwrap();
    MediumInstance::new(Arc::new(m))
}

fn stretch() -> MediumInstance {
    MediumInstance::new(Arc::new(make_periodic_medium(4.0, UField::Stretch { amplitude: 0.5 }).unwrap()))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[test]
fn zero_coefficients_keep_the_start() {
    let m = constant(vec![0.0; 4]);
    let tr = simulate(&m, &SdeConfig::new(0.1, 5.0, 3), &[1.5, -2.0]).unwrap();
    assert_eq!(tr.len(), 51);
    assert_eq!(tr.times[0], 0.0);
    for n in 0..tr.len() {
        assert_eq!(tr.state(n), &[1.5, -2.0]);
    }
}

#[test]
fn constant_drift_is_exact() {
    let dynamics = ConstantDrift { c: vec![0.5, -1.0] };
    let cfg = SdeConfig::new(0.25, 2.0, 0);
    let tr = integrate(&dynamics, &cfg, &[1.0, 1.0], None, "drift".into()).unwrap();
    for n in 0..tr.len() {
        let t = tr.times[n];
        assert!((tr.state(n)[0] - (1.0 + 0.5 * t)).abs() < 1e-14);
        assert!((tr.state(n)[1] - (1.0 - t)).abs() < 1e-14);
    }
}

#[test]
fn brownian_variance_and_second_moment() {
    let m = constant(vec![1.0, 0.0, 0.0, 1.0]);
    let n = 10_000;
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut sq = Vec::with_capacity(n);
    for p in 0..n {
        let cfg = SdeConfig::new(0.05, 1.0, 42).with_path(p as u64);
        let tr = simulate(&m, &cfg, &[0.0, 0.0]).unwrap();
        let x = tr.last();
        x1.push(x[0]);
        x2.push(x[1]);
        sq.push(x[0] * x[0] + x[1] * x[1]);
    }
    for v in [&x1, &x2] {
        let (_, sd) = mean_sd(v);
        assert!((sd * sd - 1.0).abs() < 0.05, "{}", sd * sd);
    }
    let (m2, sd) = mean_sd(&sq);
    assert!((m2 - 2.0).abs() < 3.0 * sd / (n as f64).sqrt(), "{m2}");
}

#[test]
fn same_seed_and_path_give_identical_trajectories() {
    let m = stretch();
    let cfg = SdeConfig::new(0.002, 1.0, 9).with_path(17);
    let a = simulate(&m, &cfg, &[1.0, 2.0]).unwrap();
    let b = std::thread::spawn({
        let (m, cfg) = (m.clone(), cfg.clone());
        move || simulate(&m, &cfg, &[1.0, 2.0]).unwrap()
    })
    .join()
    .unwrap();
    assert_eq!(a, b);
    let c = simulate(&m, &cfg.clone().with_path(18), &[1.0, 2.0]).unwrap();
    assert_ne!(a.states, c.states);
}

#[test]
fn control_diffusion_examples() {
    let id = constant(vec![1.0, 0.0, 0.0, 1.0]);
    let cfg = SdeConfig::new(0.01, 1.0, 5);
    assert_eq!(
        simulate_control(&id, &cfg, &[0.0, 0.0]).unwrap(),
        simulate(&id, &cfg, &[0.0, 0.0]).unwrap()
    );

    let white = simulate_control(&chessboard_zero(), &cfg, &[0.3, 0.7]).unwrap();
    assert!(white.states.chunks(2).all(|x| x[1] == 0.7));
    assert!(white.last()[0] != 0.3);

    let periodic = MediumInstance::new(Arc::new(make_periodic_medium(1.0, UField::Identity).unwrap()));
    let frozen = simulate_control(&periodic, &cfg, &[0.0, 0.0]).unwrap();
    assert!(frozen.states.iter().all(|&v| v == 0.0));
}

#[test]
fn delta_zero_reproduces_the_diffusion() {
    let m = stretch();
    let cfg = SdeConfig::new(0.001, 0.5, 4).with_path(3);
    let plain = simulate(&m, &cfg, &[1.0, 1.0]).unwrap();
    let aug = simulate_delta(&m, &cfg, 0.0, &[1.0, 1.0]).unwrap();
    for n in 0..plain.len() {
        assert_eq!(aug.state(n)[0], n as f64 * 0.001);
        assert_eq!(aug.position(n), plain.state(n));
    }
}

#[test]
fn time_coordinate_is_brownian_with_unit_drift() {
    let m = constant(vec![0.0]);
    let n = 10_000;
    let mut end = Vec::with_capacity(n);
    for p in 0..n {
        let cfg = SdeConfig::new(0.1, 2.0, 8).with_path(p as u64);
        let tr = simulate_delta(&m, &cfg, 1.0, &[0.0]).unwrap();
        end.push(tr.last()[0]);
        assert_eq!(tr.last()[1], 0.0);
    }
    let (mean, sd) = mean_sd(&end);
    assert!((mean - 2.0).abs() < 3.0 * sd / (n as f64).sqrt(), "{mean}");
    assert!((sd * sd - 2.0).abs() < 0.1, "{}", sd * sd);
}

#[test]
fn delta_paths_approach_the_diffusion() {
    let m = stretch();
    let paths = 200;
    let msd = |delta: f64| {
        (0..paths)
            .map(|p| {
                let cfg = SdeConfig::new(0.002, 2.0, 77).with_path(p);
                let a = simulate(&m, &cfg, &[PI, PI]).unwrap();
                let b = simulate_delta(&m, &cfg, delta, &[PI, PI]).unwrap();
                let (x, y) = (a.last(), b.position(b.len() - 1));
                (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)
            })
            .sum::<f64>()
            / paths as f64
    };
    let d: Vec<f64> = [1.0, 0.1, 0.01].iter().map(|&delta| msd(delta)).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn rescaling_examples() {
    let m = constant(vec![1.0]);
    let cfg = SdeConfig::new(0.01, 4.0, 2);
    let tr = simulate(&m, &cfg, &[0.0]).unwrap();
    let same = rescale(&tr, 1.0, 4.0).unwrap();
    assert_eq!(same.states, tr.states);
    assert_eq!(same.times, tr.times);

    let half = rescale(&tr, 0.5, 1.0).unwrap();
    assert_eq!(half.len(), tr.len());
    assert!((half.horizon() - 1.0).abs() < 1e-12);
    assert_eq!(half.state(100)[0], 0.5 * tr.state(100)[0]);

    assert!(matches!(
        rescale(&tr, 0.1, 1.0),
        Err(EstimateError::InsufficientHorizon { .. })
    ));

    let still = simulate(&constant(vec![0.0]), &cfg, &[0.0]).unwrap();
    assert!(rescale(&still, 0.5, 1.0).unwrap().states.iter().all(|&v| v == 0.0));
}

#[test]
fn rescaled_brownian_has_unit_covariance() {
    let m = constant(vec![1.0, 0.0, 0.0, 1.0]);
    let eps: f64 = 0.2;
    let n = 4000;
    let mut c = [0.0; 4];
    for p in 0..n {
        let cfg = SdeConfig::new(0.05, 1.0 / (eps * eps), 6).with_path(p);
        let z = rescale(&simulate(&m, &cfg, &[0.0, 0.0]).unwrap(), eps, 1.0).unwrap();
        let x = z.last();
        c[0] += x[0] * x[0];
        c[1] += x[0] * x[1];
        c[3] += x[1] * x[1];
    }
    let se = (2.0 / n as f64).sqrt();
    assert!((c[0] / n as f64 - 1.0).abs() < 4.0 * se);
    assert!((c[3] / n as f64 - 1.0).abs() < 4.0 * se);
    assert!((c[1] / n as f64).abs() < 4.0 * (1.0 / n as f64).sqrt());
}

#[test]
fn environment_observation_examples() {
    let cfg = SdeConfig::new(0.01, 1.0, 1);
    let flat = constant(vec![1.0, 0.0, 0.0, 1.0]);
    let tr = simulate(&flat, &cfg, &[0.0, 0.0]).unwrap();
    let ones = observe_environment(&flat, &tr, &NamedObservable::Constant { value: 1.0 }).unwrap();
    assert!(ones.len() == tr.len() && ones.iter().all(|&v| v == 1.0));
    let v = observe_environment(&flat, &tr, &NamedObservable::Potential).unwrap();
    assert!(v.iter().all(|&v| v == 0.0));

    let periodic = MediumInstance::new(Arc::new(make_periodic_medium(1.0, UField::Identity).unwrap()));
    let mut frozen = Trajectory::new(2, 0.01, periodic.id(), &cfg, false);
    for n in 0..10 {
        frozen.push(n, n as f64 * 0.01, &[PI, PI]);
    }
    let a11 = observe_environment(&periodic, &frozen, &NamedObservable::A { i: 1, j: 1 }).unwrap();
    assert!(a11.iter().all(|&v| (v - 16.0).abs() < 1e-12));
}

#[test]
fn trajectories_stream_to_csv() {
    let m = constant(vec![1.0]);
    let tr = simulate(&m, &SdeConfig::new(0.5, 1.0, 0).with_path(4), &[0.0]).unwrap();
    let mut w = csv::Writer::from_writer(Vec::new());
    tr.write_csv(&mut w, true).unwrap();
    let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "path,step,t,x1");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("4,0,"));
}

#[test]
fn stationary_start_stays_stationary() {
    // a = 1 + ½ sin x, V = ½ cos x: π ∝ e^{−cos x} on [0, 2π).
    let layered = LayeredMedium::new(1.0, 0.5, 0.5).unwrap();
    let m = MediumInstance::new(Arc::new(layered));
    let n = 20_000;
    let q = 100_000;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..q {
        let x = TAU * k as f64 / q as f64;
        num += x.cos() * (-x.cos()).exp();
        den += (-x.cos()).exp();
    }
    let oracle = num / den;
    let floor = potential_floor(&m).unwrap();
    let mut at0 = Vec::with_capacity(n);
    let mut at1 = Vec::with_capacity(n);
    for p in 0..n {
        let (s, y) = sample_initial_shift(&m, floor, 12, p as u64).unwrap();
        at0.push(y[0].cos());
        let shifted = m.shifted(s, &y);
        let cfg = SdeConfig::new(0.005, 2.0, 13).with_path(p as u64);
        let tr = simulate(&shifted, &cfg, &[0.0]).unwrap();
        at1.push((y[0] + tr.last()[0]).cos());
    }
    for v in [&at0, &at1] {
        let (mean, sd) = mean_sd(v);
        assert!((mean - oracle).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean} vs {oracle}");
    }
}
