//! TOML analysis configuration.

use std::path::{Path, PathBuf};

use ovbsense_core::dgp::{derive_seed, DgpConfig};
use ovbsense_core::dml::{DmlSettings, Nu2Moment, DEFAULT_FOLDS};
use ovbsense_core::learners::{LearnerConfig, DEFAULT_CLIP_EPS};
use ovbsense_core::model::{Estimand, EstimandKind, SensitivityParams};
use ovbsense_core::sensitivity::{AxisSpec, BoundSelector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_clip_eps")]
    pub clip_eps: f64,
    #[serde(default)]
    pub nu2_moment: Nu2Moment,
    /// Relative paths resolve against the config file's directory.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub estimand: EstimandSection,
    #[serde(default)]
    pub learners: LearnerSection,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub benchmark: Option<BenchmarkSection>,
    #[serde(default)]
    pub contour: Option<ContourSection>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub validate: Option<ValidateSection>,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_clip_eps() -> f64 {
    DEFAULT_CLIP_EPS
}

fn default_level() -> f64 {
    0.95
}

fn default_rho() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    pub outcome: String,
    pub treatment: String,
    /// All remaining columns when absent.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimandSection {
    #[serde(default = "default_kind")]
    pub kind: EstimandKind,
    #[serde(default)]
    pub h0: f64,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_kind() -> EstimandKind {
    EstimandKind::Att
}

impl Default for EstimandSection {
    fn default() -> Self {
        Self { kind: EstimandKind::Att, h0: 0.0, level: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    #[serde(default = "default_g")]
    pub g: LearnerConfig,
    #[serde(default = "default_m")]
    pub m: LearnerConfig,
}

fn default_g() -> LearnerConfig {
    LearnerConfig::ridge(1.0)
}

fn default_m() -> LearnerConfig {
    LearnerConfig::logistic(0.0)
}

impl Default for LearnerSection {
    fn default() -> Self {
        Self { g: default_g(), m: default_m() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub cf_y: f64,
    pub cf_d: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub label: Option<String>,
}

impl Scenario {
    pub fn params(&self) -> CliResult<SensitivityParams> {
        SensitivityParams::new(self.cf_y, self.cf_d, self.rho).map_err(|e| CliError::Config(format!("scenario: {e}")))
    }
}

impl Default for Scenario {
    fn default() -> Self {
        let p = SensitivityParams::default();
        Self { cf_y: p.cf_y, cf_d: p.cf_d, rho: p.rho, label: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    pub sets: Vec<Vec<String>>,
    /// Also run a sensitivity analysis at each calibrated scenario.
    #[serde(default)]
    pub chain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSection {
    pub cf_y: AxisSpec,
    pub cf_d: AxisSpec,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub which: BoundSelector,
    /// Iso-values for the contour lines; evenly spaced when absent.
    #[serde(default)]
    pub levels: Option<Vec<f64>>,
    #[serde(default = "default_n_levels")]
    pub n_levels: usize,
    #[serde(default = "default_true")]
    pub rv_mark: bool,
}

fn default_n_levels() -> usize {
    8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSection {
    #[serde(flatten)]
    pub dgp: DgpConfig,
    /// File name of the simulated CSV inside the output directory.
    #[serde(default = "default_sim_file")]
    pub file: String,
}

fn default_sim_file() -> String {
    "simulated.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateSection {
    #[serde(flatten)]
    pub dgp: DgpConfig,
    pub reps: usize,
    #[serde(default = "default_calibration_n")]
    pub calibration_n: usize,
    /// Pass band for naive CI coverage.
    #[serde(default)]
    pub naive_coverage: Option<[f64; 2]>,
    #[serde(default)]
    pub max_naive_coverage: Option<f64>,
    #[serde(default)]
    pub min_bound_ci_coverage: Option<f64>,
}

fn default_calibration_n() -> usize {
    400_000
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: AnalysisConfig,
    pub base_dir: PathBuf,
    /// SHA-256 of the config file bytes, hex encoded.
    pub hash: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::Config(format!("config {} is not valid UTF-8", path.display())))?;
        let config: AnalysisConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let hash = hex(&Sha256::digest(&bytes));
        Ok(Self { config, base_dir, hash })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl AnalysisConfig {
    pub fn data(&self) -> CliResult<&DataSection> {
        self.data.as_ref().ok_or_else(|| CliError::Config("missing [data] section".into()))
    }

    pub fn estimand(&self) -> CliResult<Estimand> {
        let e = &self.estimand;
        Estimand::new(e.kind, e.h0, e.level).map_err(|e| CliError::Config(format!("estimand: {e}")))
    }

    /// Estimation settings; learner seeds are derived from the master seed
    /// so one number pins every random stream.
    pub fn dml_settings(&self) -> CliResult<DmlSettings> {
        let settings = DmlSettings {
            learner_g: self.learners.g.clone().with_seed(derive_seed(self.seed, 1)).with_clip_eps(self.clip_eps),
            learner_m: self.learners.m.clone().with_seed(derive_seed(self.seed, 2)).with_clip_eps(self.clip_eps),
            n_folds: self.folds,
            seed: self.seed,
            clip_eps: self.clip_eps,
            nu2_moment: self.nu2_moment,
        };
        settings.learner_g.validate().map_err(|e| CliError::Config(format!("learners.g: {e}")))?;
        settings.learner_m.validate().map_err(|e| CliError::Config(format!("learners.m: {e}")))?;
        if self.folds < 2 {
            return Err(CliError::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 0.5) {
            return Err(CliError::Config(format!("clip_eps must lie in (0, 0.5), got {}", self.clip_eps)));
        }
        Ok(settings)
    }

    /// Configured scenarios, or the single default scenario when none are
    /// given.
    pub fn scenarios_or_default(&self) -> Vec<Scenario> {
        if self.scenarios.is_empty() {
            vec![Scenario::default()]
        } else {
            self.scenarios.clone()
        }
    }
}
