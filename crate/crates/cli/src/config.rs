//! Run configuration: one JSON file, unknown keys rejected.

use std::path::{Path, PathBuf};

use homog::corrector::CorrectorConfig;
use homog::medium::MediumSpec;
use homog::montecarlo::{EnsembleSpec, ErgodicSpec, InitialDistribution};
use homog::sde::{default_dt, NamedObservable};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumSpec,
    /// Master seed; every random draw of the run derives from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sde: Option<SdeSection>,
    #[serde(default)]
    pub corrector: Option<CorrectorConfig>,
    #[serde(default)]
    pub ergodic: Option<ErgodicSection>,
    #[serde(default)]
    pub compare: Option<CompareSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSection {
    /// Defaults to `1e-3·min(1, 1/K²)`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub epsilon: f64,
    #[serde(default = "unit")]
    pub macro_horizon: f64,
    #[serde(default = "default_observation_times")]
    pub observation_times: Vec<f64>,
    pub n_paths: usize,
    #[serde(default = "one")]
    pub n_media: usize,
    #[serde(default = "twenty")]
    pub batches: usize,
    #[serde(default)]
    pub initial: InitialDistribution,
    /// Also run the inter-medium dispersion study at these ε.
    #[serde(default)]
    pub dispersion_epsilons: Option<Vec<f64>>,
    /// Number of raw micro-scale paths written to `trajectories.csv`.
    #[serde(default)]
    pub trajectories: usize,
    #[serde(default = "hundred")]
    pub record_every: usize,
    /// Effective-matrix file used as `A` in the cross-covariance check.
    #[serde(default)]
    pub reference: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicSection {
    pub observable: NamedObservable,
    pub n_paths: usize,
    #[serde(default = "one")]
    pub n_media: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    pub times: Vec<f64>,
    #[serde(default = "twenty")]
    pub batches: usize,
    #[serde(default)]
    pub reference: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// Largest admissible relative Frobenius error.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

impl OutputSection {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }
}

fn unit() -> f64 {
    1.0
}

fn one() -> usize {
    1
}

fn twenty() -> usize {
    20
}

fn hundred() -> usize {
    100
}

fn default_observation_times() -> Vec<f64> {
    vec![0.5, 1.0]
}

fn default_tolerance() -> f64 {
    0.1
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if !cfg.output.formats.contains(&Format::Json) {
            return Err(CliError::Config("output.formats must include json".into()));
        }
        Ok(cfg)
    }

    pub fn sde(&self) -> Result<&SdeSection, CliError> {
        self.sde
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs an `sde` section".into()))
    }

    pub fn corrector(&self) -> Result<&CorrectorConfig, CliError> {
        self.corrector
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a `corrector` section".into()))
    }

    pub fn ergodic(&self) -> Result<&ErgodicSection, CliError> {
        self.ergodic
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs an `ergodic` section".into()))
    }

    pub fn tolerance(&self) -> f64 {
        self.compare.as_ref().map_or_else(default_tolerance, |c| c.tolerance)
    }

    /// Fill in defaults that depend on the medium, so the emitted config
    /// reproduces the run exactly.
    pub fn resolve(&mut self, bound: f64) {
        if let Some(s) = self.sde.as_mut() {
            s.dt.get_or_insert(default_dt(bound));
        }
        if let Some(e) = self.ergodic.as_mut() {
            e.dt.get_or_insert(default_dt(bound));
        }
    }
}

impl SdeSection {
    pub fn ensemble(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            n_paths: self.n_paths,
            n_media: self.n_media,
            epsilon: self.epsilon,
            macro_horizon: self.macro_horizon,
            observation_times: self.observation_times.clone(),
            master_seed: seed,
            dt: self.dt.expect("resolved"),
            batches: self.batches,
            initial: self.initial,
        }
    }
}

impl ErgodicSection {
    pub fn spec(&self, seed: u64) -> ErgodicSpec {
        ErgodicSpec {
            n_paths: self.n_paths,
            n_media: self.n_media,
            master_seed: seed,
            dt: self.dt.expect("resolved"),
            times: self.times.clone(),
            batches: self.batches,
            reference: self.reference,
        }
    }
}
