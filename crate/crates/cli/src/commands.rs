//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns a JSON-serializable summary.

use std::path::{Path, PathBuf};

use homog::corrector::{io::write_solution, run_cell_problem, CorrectorRun, ExtrapolationSummary};
use homog::effective::{max_entry_distance, relative_frobenius, EffectiveDiffusivity};
use homog::medium::{check_bound, make_chessboard_medium, validate_control, BoundReport, ControlReport, MediumInstance};
use homog::montecarlo::{
    dispersion_study, ergodic_average, gaussianity_diagnostics, mc_diffusivity, noise_seed, DiagnosticsReport,
    DispersionReport, Ensemble, ErgodicCurve, McEstimate, MediumFamily, Reference,
};
use homog::sde::{simulate, SdeConfig};
use homog::json;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

/// Version of every JSON document written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

/// Grid resolution of the control-constant check run before every command.
const VALIDATION_RESOLUTION: usize = 12;

/// An effective matrix on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub effective: EffectiveDiffusivity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub corrector: PathBuf,
    pub monte_carlo: PathBuf,
    pub dim: usize,
    pub relative_frobenius: f64,
    pub max_entry_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MediumValidation {
    pub control: ControlReport,
    pub bound: BoundReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct StripeSummary {
    pub name: &'static str,
    pub cells: usize,
    pub mean_color: f64,
    /// Three binomial standard deviations of the mean.
    pub three_sigma: f64,
    pub within: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MediumSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub medium_seed: u64,
    pub p: f64,
    pub stripes: Vec<StripeSummary>,
    pub record: PathBuf,
    pub field: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectorReport {
    pub schema_version: u32,
    pub seed: u64,
    pub medium: String,
    pub shape: Vec<usize>,
    pub effective: EffectiveDiffusivity,
    pub symmetric: bool,
    pub psd: bool,
    pub energy_holds: bool,
    pub extrapolation: Vec<ExtrapolationSummary>,
    pub continuation: Vec<homog::corrector::ContinuationReport>,
    pub solves: Vec<SolveSummary>,
    pub validation: MediumValidation,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub coordinate: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub energy: homog::corrector::EnergyCheck,
    pub file: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub seed: u64,
    pub epsilon: f64,
    pub n_paths: usize,
    pub n_media: usize,
    pub dt: f64,
    pub estimate: McEstimate,
    pub effective: EffectiveDiffusivity,
    pub reference: Option<PathBuf>,
    pub dispersion: Option<DispersionReport>,
    pub validation: MediumValidation,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicReport {
    pub schema_version: u32,
    pub seed: u64,
    pub observable: homog::sde::NamedObservable,
    pub curve: ErgodicCurve,
}

#[derive(Clone, Debug, Serialize)]
pub struct FullReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub corrector: Option<CorrectorReport>,
    pub estimate: Option<EstimateReport>,
    pub diagnostics: Option<DiagnosticsReport>,
    pub ergodic: Option<ErgodicReport>,
    pub comparison: Option<Comparison>,
}

/// Resolved configuration plus output directory.
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Run {
    pub fn new(mut config: RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self, CliError> {
        if let Some(s) = seed {
            config.seed = s;
        }
        if let Some(o) = out {
            config.output.directory = o;
        }
        let bound = MediumFamily::new(config.medium.clone(), config.seed)?
            .draw(config.seed, 0)?
            .field()
            .bound();
        config.resolve(bound);
        let out = config.output.directory.clone();
        std::fs::create_dir_all(&out)?;
        Ok(Self { config, out })
    }

    fn family(&self) -> Result<MediumFamily, CliError> {
        Ok(MediumFamily::new(self.config.medium.clone(), self.config.seed)?)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Returns the file name relative to the output directory.
    fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        json::write_file(&self.path(name), value)?;
        Ok(PathBuf::from(name))
    }
}

/// Declared control constants and the bound `K` checked on a grid.
pub fn validate_medium(medium: &MediumInstance) -> Result<MediumValidation, CliError> {
    let field = medium.field();
    let control = validate_control(field.as_ref(), &field.control_constants(), VALIDATION_RESOLUTION)?;
    let bound = check_bound(field.as_ref(), VALIDATION_RESOLUTION)?;
    if !control.passed || !bound.passed {
        return Err(CliError::Config(format!(
            "medium {} violates its declared constants: control margins {:?}, bound {} > {}",
            field.name(),
            control.margins,
            bound.observed,
            bound.declared
        )));
    }
    Ok(MediumValidation { control, bound })
}

pub fn medium_sample(run: &Run) -> Result<MediumSummary, CliError> {
    let seed = MediumFamily::medium_seed(run.config.seed, 0);
    let params = run
        .config
        .medium
        .chessboard_params(seed)
        .ok_or_else(|| CliError::Config("medium-sample needs a chessboard medium".into()))?;
    let medium = make_chessboard_medium(params.clone())?;
    let record = run.write_json("medium.json", &medium.record())?;
    let stripes = [("beta", medium.beta()), ("alpha1", medium.alpha1()), ("alpha2", medium.alpha2())]
        .into_iter()
        .map(|(name, s)| {
            let cells = s.colors.len();
            let three_sigma = 3.0 * (params.p * (1.0 - params.p) / cells as f64).sqrt();
            let mean_color = s.mean_color();
            StripeSummary {
                name,
                cells,
                mean_color,
                three_sigma,
                within: (mean_color - params.p).abs() <= three_sigma,
            }
        })
        .collect();
    let field = if run.config.output.csv() {
        write_field(&run.path("medium_field.csv"), &MediumInstance::new(std::sync::Arc::new(medium)))?;
        Some(PathBuf::from("medium_field.csv"))
    } else {
        None
    };
    let summary = MediumSummary {
        schema_version: SCHEMA_VERSION,
        seed: run.config.seed,
        medium_seed: seed,
        p: params.p,
        stripes,
        record,
        field,
    };
    run.write_json("medium_summary.json", &summary)?;
    Ok(summary)
}

/// `a` and `V` at `t = 0` on a 129 × 129 grid over `[−8, 8]²`.
fn write_field(path: &Path, medium: &MediumInstance) -> Result<(), CliError> {
    let d = medium.dim();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["x1".to_string(), "x2".into()];
    for i in 1..=d {
        for j in 1..=d {
            header.push(format!("a{i}{j}"));
        }
    }
    header.push("v".into());
    w.write_record(&header)?;
    let n = 129;
    for p in 0..n {
        for q in 0..n {
            let x = [-8.0 + 16.0 * p as f64 / (n - 1) as f64, -8.0 + 16.0 * q as f64 / (n - 1) as f64];
            let s = medium.sample_new(0.0, &x)?;
            let mut row: Vec<String> = x.iter().map(|v| format!("{v:.16e}")).collect();
            row.extend(s.a.iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", s.v));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn solve_corrector(run: &Run) -> Result<CorrectorReport, CliError> {
    let cfg = run.config.corrector()?;
    let medium = run.family()?.draw(run.config.seed, 0)?;
    let validation = validate_medium(&medium)?;
    let (problem, result) = run_cell_problem(&medium, cfg)?;
    let CorrectorRun {
        solutions,
        continuation,
        extrapolations,
        effective,
    } = &result;
    let dir = run.path("solutions");
    let mut solves = Vec::new();
    for sol in solutions.iter().flatten() {
        let stem = format!("u_{}_lambda_{:e}", sol.coordinate + 1, sol.lambda);
        write_solution(&dir, &stem, &problem, sol)?;
        let file = Path::new("solutions").join(format!("{stem}.json"));
        solves.push(SolveSummary {
            coordinate: sol.coordinate,
            lambda: sol.lambda,
            iterations: sol.iterations,
            residual_norm: sol.residual_norm,
            energy: sol.energy.clone(),
            file,
        });
    }
    let extrapolation: Vec<ExtrapolationSummary> = extrapolations.iter().map(|e| e.summary()).collect();
    if run.config.output.csv() {
        write_extrapolation_csv(&run.path("extrapolation.csv"), &extrapolation, &solves)?;
        write_continuation_csv(&run.path("continuation.csv"), continuation)?;
    }
    run.write_json(
        "corrector_A.json",
        &MatrixFile {
            schema_version: SCHEMA_VERSION,
            seed: run.config.seed,
            effective: effective.clone(),
        },
    )?;
    let report = CorrectorReport {
        schema_version: SCHEMA_VERSION,
        seed: run.config.seed,
        medium: problem.medium_id().to_string(),
        shape: cfg.shape.clone(),
        symmetric: effective.is_symmetric(1e-12),
        psd: effective.is_psd(1e-12),
        energy_holds: result.energy_holds(),
        effective: effective.clone(),
        extrapolation,
        continuation: continuation.clone(),
        solves,
        validation,
    };
    run.write_json("corrector_report.json", &report)?;
    Ok(report)
}

/// One row per `(coordinate, λ)`: `λ|u_λ|²`, the gradient change to the next
/// λ and the solver outcome.
fn write_extrapolation_csv(path: &Path, ex: &[ExtrapolationSummary], solves: &[SolveSummary]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "coordinate",
        "lambda",
        "lambda_energy",
        "gradient_difference",
        "iterations",
        "residual_norm",
        "energy_holds",
    ])?;
    for e in ex {
        for (k, &lambda) in e.lambdas.iter().enumerate() {
            let s = solves.iter().find(|s| s.coordinate == e.coordinate && s.lambda == lambda);
            w.write_record([
                (e.coordinate + 1).to_string(),
                format!("{lambda:.16e}"),
                format!("{:.16e}", e.lambda_energy[k]),
                e.gradient_differences.get(k).map_or(String::new(), |g| format!("{g:.16e}")),
                s.map_or(String::new(), |s| s.iterations.to_string()),
                s.map_or(String::new(), |s| format!("{:.16e}", s.residual_norm)),
                s.map_or(String::new(), |s| s.energy.holds.to_string()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_continuation_csv(path: &Path, reports: &[homog::corrector::ContinuationReport]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["coordinate", "lambda", "delta", "difference"])?;
    for r in reports {
        for (k, diff) in r.differences.iter().enumerate() {
            w.write_record([
                (r.coordinate + 1).to_string(),
                format!("{:.16e}", r.lambda),
                format!("{:.16e}", r.deltas[k]),
                format!("{diff:.16e}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<MatrixFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let m: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{} is not a matrix file: {e}", path.display())))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{} has schema version {}, expected {SCHEMA_VERSION}",
            path.display(),
            m.schema_version
        )));
    }
    let d = m.effective.dim;
    if m.effective.matrix.len() != d || m.effective.matrix.iter().any(|r| r.len() != d) {
        return Err(CliError::Config(format!("{}: matrix is not {d} x {d}", path.display())));
    }
    Ok(m)
}

/// Relative Frobenius error of the Monte Carlo matrix against the corrector
/// matrix.
pub fn compare(corrector: &Path, monte_carlo: &Path, tolerance: f64) -> Result<Comparison, CliError> {
    if !(tolerance >= 0.0) {
        return Err(CliError::Config(format!("tolerance must be nonnegative, got {tolerance}")));
    }
    let (c, m) = (read_matrix(corrector)?, read_matrix(monte_carlo)?);
    if c.effective.dim != m.effective.dim {
        return Err(CliError::Config(format!(
            "dimension mismatch: {} vs {}",
            c.effective.dim, m.effective.dim
        )));
    }
    let (a, b) = (c.effective.flat(), m.effective.flat());
    let err = relative_frobenius(&b, &a);
    Ok(Comparison {
        schema_version: SCHEMA_VERSION,
        corrector: corrector.to_path_buf(),
        monte_carlo: monte_carlo.to_path_buf(),
        dim: c.effective.dim,
        relative_frobenius: err,
        max_entry_distance: max_entry_distance(&a, &b),
        tolerance,
        pass: err <= tolerance,
    })
}

pub fn write_comparison(out: &Path, cmp: &Comparison) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    json::write_file(&out.join("comparison.json"), cmp)?;
    Ok(())
}

pub fn estimate(run: &Run) -> Result<(EstimateReport, DiagnosticsReport), CliError> {
    let sde = run.config.sde()?;
    let family = run.family()?;
    let validation = validate_medium(&family.draw(run.config.seed, 0)?)?;
    let spec = sde.ensemble(run.config.seed);
    let (effective, estimate, ens) = mc_diffusivity(&family, &spec)?;
    let reference = match &sde.reference {
        Some(p) => {
            let m = read_matrix(p)?;
            if m.effective.dim != estimate.dim {
                return Err(CliError::Config(format!("reference {} has the wrong dimension", p.display())));
            }
            Reference {
                a: m.effective.flat(),
                ci: m.effective.ci.concat(),
            }
        }
        None => Reference {
            a: estimate.a_hat.clone(),
            ci: estimate.ci.clone(),
        },
    };
    let diagnostics = gaussianity_diagnostics(&ens, &reference, sde.batches)?;
    let dispersion = match &sde.dispersion_epsilons {
        Some(eps) => Some(dispersion_study(&family, &spec, eps)?),
        None => None,
    };
    run.write_json(
        "mc_A.json",
        &MatrixFile {
            schema_version: SCHEMA_VERSION,
            seed: run.config.seed,
            effective: effective.clone(),
        },
    )?;
    run.write_json("diagnostics.json", &diagnostics)?;
    if let Some(d) = &dispersion {
        run.write_json("dispersion.json", d)?;
    }
    if run.config.output.csv() {
        write_moments_csv(&run.path("moments.csv"), &estimate)?;
        write_samples_csv(&run.path("samples.csv"), &ens)?;
        if let Some(d) = &dispersion {
            write_dispersion_csv(&run.path("dispersion.csv"), d)?;
        }
        if sde.trajectories > 0 {
            write_trajectories(run, &family)?;
        }
    }
    let report = EstimateReport {
        schema_version: SCHEMA_VERSION,
        seed: run.config.seed,
        epsilon: sde.epsilon,
        n_paths: sde.n_paths,
        n_media: sde.n_media,
        dt: spec.dt,
        estimate,
        effective,
        reference: sde.reference.clone(),
        dispersion,
        validation,
    };
    run.write_json("estimate_report.json", &report)?;
    Ok((report, diagnostics))
}

fn entry_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).flat_map(|i| (1..=d).map(move |j| format!("{prefix}{i}{j}"))).collect()
}

/// Covariance of `Z_t / t` and half-widths at every observation time.
fn write_moments_csv(path: &Path, est: &McEstimate) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(entry_names("a", est.dim));
    header.extend(entry_names("ci", est.dim));
    w.write_record(&header)?;
    for c in &est.per_time {
        let mut row = vec![format!("{:.16e}", c.time)];
        row.extend(c.matrix.iter().chain(&c.ci).map(|v| format!("{v:.16e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Rescaled positions `Z_t` of every path at every observation time.
fn write_samples_csv(path: &Path, ens: &Ensemble) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["path".to_string(), "medium".into(), "t".into()];
    header.extend((1..=ens.dim).map(|i| format!("z{i}")));
    w.write_record(&header)?;
    for p in 0..ens.n_paths() {
        for (k, t) in ens.times.iter().enumerate() {
            let mut row = vec![p.to_string(), ens.medium_index[p].to_string(), format!("{t:.16e}")];
            row.extend(ens.z(p, k).iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_dispersion_csv(path: &Path, r: &DispersionReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let d = (r.points.first().map_or(0, |p| p.a_hat.len()) as f64).sqrt() as usize;
    let mut header = vec!["epsilon".to_string()];
    header.extend(entry_names("a", d));
    header.extend(["raw_dispersion".to_string(), "dispersion".into()]);
    w.write_record(&header)?;
    for p in &r.points {
        let mut row = vec![format!("{:.16e}", p.epsilon)];
        row.extend(p.a_hat.iter().map(|v| format!("{v:.16e}")));
        row.push(format!("{:.16e}", p.raw_dispersion));
        row.push(format!("{:.16e}", p.dispersion));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Micro-scale sample paths in medium 0, started at the origin, on the
/// ensemble's noise streams.
fn write_trajectories(run: &Run, family: &MediumFamily) -> Result<(), CliError> {
    let sde = run.config.sde()?;
    let spec = sde.ensemble(run.config.seed);
    let medium = family.draw(run.config.seed, 0)?;
    let origin = vec![0.0; medium.dim()];
    let mut w = csv::Writer::from_path(run.path("trajectories.csv"))?;
    for k in 0..sde.trajectories.min(sde.n_paths) {
        let cfg = SdeConfig::new(spec.dt, spec.micro_horizon(), noise_seed(run.config.seed, 0))
            .with_path(k as u64)
            .with_record_every(sde.record_every.max(1));
        let tr = simulate(&medium, &cfg, &origin)?;
        tr.write_csv(&mut w, k == 0)?;
    }
    w.flush()?;
    Ok(())
}

pub fn ergodic(run: &Run) -> Result<ErgodicReport, CliError> {
    let section = run.config.ergodic()?;
    let family = run.family()?;
    section.observable.check(family.dim())?;
    validate_medium(&family.draw(run.config.seed, 0)?)?;
    let curve = ergodic_average(&family, &section.observable, &section.spec(run.config.seed))?;
    if run.config.output.csv() {
        let mut w = csv::Writer::from_path(run.path("ergodic.csv"))?;
        w.write_record(["t", "error", "ci", "mean_average"])?;
        for k in 0..curve.times.len() {
            w.write_record([curve.times[k], curve.errors[k], curve.ci[k], curve.mean_average[k]].map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
    }
    let report = ErgodicReport {
        schema_version: SCHEMA_VERSION,
        seed: run.config.seed,
        observable: section.observable.clone(),
        curve,
    };
    run.write_json("ergodic.json", &report)?;
    Ok(report)
}

/// Every section present in the configuration, then the comparison when
/// both effective matrices exist.
pub fn report(run: &Run) -> Result<FullReport, CliError> {
    let corrector = run.config.corrector.is_some().then(|| solve_corrector(run)).transpose()?;
    let (estimate, diagnostics) = match run.config.sde {
        Some(_) => {
            let (e, d) = estimate(run)?;
            (Some(e), Some(d))
        }
        None => (None, None),
    };
    let ergodic = run.config.ergodic.is_some().then(|| ergodic(run)).transpose()?;
    let comparison = if corrector.is_some() && estimate.is_some() {
        let c = compare(&run.path("corrector_A.json"), &run.path("mc_A.json"), run.config.tolerance())?;
        write_comparison(&run.out, &c)?;
        Some(c)
    } else {
        None
    };
    let full = FullReport {
        schema_version: SCHEMA_VERSION,
        config: run.config.clone(),
        corrector,
        estimate,
        diagnostics,
        ergodic,
        comparison,
    };
    run.write_json("report.json", &full)?;
    Ok(full)
}
