use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn homog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn matrix_file(dir: &Path, name: &str, m: [[f64; 2]; 2]) -> PathBuf {
    let v = json!({
        "schema_version": 1,
        "seed": 0,
        "dim": 2,
        "matrix": m,
        "method": "corrector",
        "ci": [[0.0, 0.0], [0.0, 0.0]],
        "error_estimate": null,
        "eigenvalues": [0.0, 0.0]
    });
    write_config(dir, name, &v)
}

fn scaled(c: f64) -> [[f64; 2]; 2] {
    [[2.0 * c, 0.3 * c], [0.3 * c, 1.0 * c]]
}

fn compare(dir: &Path, other: f64) -> (i32, Value) {
    let a = matrix_file(dir, "a.json", scaled(1.0));
    let b = matrix_file(dir, &format!("b{other}.json"), scaled(other));
    let out = dir.join(format!("cmp{other}"));
    let o = homog(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--tolerance",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    (code(&o), read_json(&out.join("comparison.json")))
}

#[test]
fn comparing_identical_matrices_passes_with_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let (c, v) = compare(dir.path(), 1.0);
    assert_eq!(c, 0);
    assert_eq!(v["relative_frobenius"].as_f64().unwrap(), 0.0);
    assert_eq!(v["pass"], true);
}

#[test]
fn five_percent_scaling_passes_at_ten_percent() {
    let dir = tempfile::tempdir().unwrap();
    let (c, v) = compare(dir.path(), 1.05);
    assert_eq!(c, 0);
    assert!((v["relative_frobenius"].as_f64().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn fifty_percent_scaling_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (c, v) = compare(dir.path(), 1.5);
    assert_eq!(c, 1);
    assert_eq!(v["pass"], false);
}

#[test]
fn comparing_different_dimensions_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = matrix_file(dir.path(), "a.json", scaled(1.0));
    let b = write_config(
        dir.path(),
        "b.json",
        &json!({"schema_version": 1, "seed": 0, "dim": 1, "matrix": [[1.0]], "method": "monte_carlo",
                "ci": [[0.0]], "eigenvalues": [1.0]}),
    );
    let o = homog(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let missing = dir.path().join("none.json");
    let o = homog(&["compare", a.to_str().unwrap(), missing.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_configurations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        json!({"medium": {"kind": "constant", "sigma": [[1.0]]}, "sde": {"epsilon": 0.1, "n_paths": 200}, "bogus": 1}),
        json!({"medium": {"kind": "constant", "sigma": [[1.0]], "extra": true}}),
        json!({"medium": {"kind": "constant", "sigma": [[1.0]]}, "sde": {"epsilon": 0.1, "n_paths": 10, "dt": 0.1}}),
        json!({"medium": {"kind": "constant", "sigma": [[1.0]]}}),
        json!({"medium": {"kind": "periodic", "u": {"kind": "stretch", "amplitude": 1.5}}, "sde": {"epsilon": 0.1, "n_paths": 200}}),
    ];
    for (k, cfg) in cases.iter().enumerate() {
        let p = write_config(dir.path(), &format!("bad{k}.json"), cfg);
        let o = homog(&["estimate", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "case {k}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = homog(&["estimate", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = homog(&["no-such-command"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn medium_sample_requires_a_chessboard() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.json", &json!({"medium": {"kind": "constant", "sigma": [[1.0]]}}));
    let o = homog(&["medium-sample", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn extreme_probabilities_give_constant_colors() {
    let dir = tempfile::tempdir().unwrap();
    for (p, c) in [(1.0, 1), (0.0, 0)] {
        let cfg = write_config(
            dir.path(),
            &format!("p{p}.json"),
            &json!({"medium": {"kind": "chessboard", "p": p, "extent": 100}, "seed": 3}),
        );
        let out = dir.path().join(format!("out{p}"));
        let o = homog(&["medium-sample", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let rec = read_json(&out.join("medium.json"));
        for stripe in ["beta", "alpha1", "alpha2"] {
            let colors = rec["colors"][stripe].as_array().unwrap();
            assert_eq!(colors.len(), 200);
            assert!(colors.iter().all(|v| v.as_i64() == Some(c)));
        }
        let summary = read_json(&out.join("medium_summary.json"));
        assert!(summary["stripes"].as_array().unwrap().iter().all(|s| s["mean_color"].as_f64() == Some(p)));
    }
}

#[test]
fn half_probability_sample_has_binomial_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"medium": {"kind": "chessboard", "p": 0.5, "extent": 5000}, "seed": 11}),
    );
    let o = homog(&["medium-sample", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let summary = read_json(&dir.path().join("medium_summary.json"));
    for s in summary["stripes"].as_array().unwrap() {
        assert_eq!(s["cells"], 10_000);
        let m = s["mean_color"].as_f64().unwrap();
        assert!((0.485..=0.515).contains(&m), "{m}");
        assert_eq!(s["within"], true);
    }
    let field = std::fs::read_to_string(dir.path().join("medium_field.csv")).unwrap();
    assert!(field.starts_with("x1,x2,a11,a12,a21,a22,v"));
}

#[test]
fn sampled_chessboard_can_be_reloaded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &json!({"medium": {"kind": "chessboard", "p": 0.5, "extent": 64}}));
    let o = homog(&["medium-sample", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let record = dir.path().join("medium.json");
    let cfg = write_config(
        dir.path(),
        "r.json",
        &json!({"medium": {"kind": "chessboard", "p": 0.5, "record": record},
                "sde": {"epsilon": 1.0, "dt": 0.01, "n_paths": 100, "batches": 10}}),
    );
    let out = dir.path().join("est");
    let o = homog(&["estimate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("mc_A.json").exists());
}

#[test]
fn constant_medium_corrector_gives_sigma_sigma_transpose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"medium": {"kind": "constant", "sigma": [[2.0, 0.0], [1.0, 1.0]]}, "corrector": {"shape": [1, 8, 8]}}),
    );
    let o = homog(&["solve-corrector", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = read_json(&dir.path().join("corrector_A.json"));
    let want = [[4.0, 2.0], [2.0, 2.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((a["matrix"][i][j].as_f64().unwrap() - want[i][j]).abs() < 1e-10, "{a}");
        }
    }
    let report = read_json(&dir.path().join("corrector_report.json"));
    assert_eq!(report["energy_holds"], true);
    for s in report["solves"].as_array().unwrap() {
        assert!(dir.path().join(s["file"].as_str().unwrap()).exists());
    }
    let ex = std::fs::read_to_string(dir.path().join("extrapolation.csv")).unwrap();
    assert_eq!(ex.lines().count(), 1 + 2 * 3);
}

#[test]
fn report_embeds_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"medium": {"kind": "layered", "mean": 1.0, "amplitude": 0.5},
                "corrector": {"shape": [1, 64]},
                "sde": {"epsilon": 0.2, "dt": 0.01, "n_paths": 400}}),
    );
    let o = homog(&["report", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "42"]);
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["seed"], 42);
    assert_eq!(r["config"]["sde"]["dt"].as_f64(), Some(0.01));
    assert_eq!(r["config"]["compare"], Value::Null);
    assert!(r["comparison"]["relative_frobenius"].is_number());
    let resolved: homog_cli::RunConfig = serde_json::from_value(r["config"].clone()).unwrap();
    assert_eq!(resolved.output.directory, out);
}

#[test]
fn default_time_step_is_resolved_from_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"medium": {"kind": "constant", "sigma": [[1.0]]}, "sde": {"epsilon": 1.0, "n_paths": 100, "batches": 10}}),
    );
    let o = homog(&["report", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["config"]["sde"]["dt"].as_f64(), Some(1e-3));
}

#[test]
fn worker_count_does_not_change_the_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"medium": {"kind": "chessboard", "p": 0.5, "extent": 256},
                "seed": 9,
                "sde": {"epsilon": 0.5, "dt": 0.01, "n_paths": 60, "n_media": 3, "batches": 10,
                        "dispersion_epsilons": [1.0, 0.5]},
                "ergodic": {"observable": {"kind": "a", "i": 2, "j": 2}, "n_paths": 20, "n_media": 2,
                            "dt": 0.05, "times": [5, 20], "batches": 10}}),
    );
    let files = ["report.json", "mc_A.json", "diagnostics.json", "dispersion.json", "ergodic.json", "samples.csv"];
    let run = |workers: &str| {
        let o = homog(&["report", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files.map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let one = run("1");
    let four = run("4");
    for (k, f) in files.iter().enumerate() {
        assert!(one[k] == four[k], "{f} differs between worker counts");
    }
}
