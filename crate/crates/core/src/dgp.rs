//! Synthetic data with a latent confounder and known potential outcomes.
//!
//! Reference process:
//!
//! ```text
//! X ~ N(0, I_p),  U ~ N(0, 1)
//! D ~ Bernoulli(sigmoid(gamma_0 + gamma_x'X + gamma_u U))
//! Y(0) = beta_x'X + beta_u U + e,  e ~ N(0, noise_sd²)
//! Y(1) = Y(0) + theta + effect_x1 * X_1
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dml::{fit_dml, make_folds, DmlSettings, FoldAssignment};
use crate::error::{Error, Result};
use crate::model::{Dataset, Estimand, Matrix, SensitivityParams};
use crate::sensitivity::{benchmark, sensitivity_analysis};
use crate::stats::{mean, sigmoid};

/// Column name given to the latent confounder when it is exposed to the
/// long model.
pub const LATENT_NAME: &str = "latent_u";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub n: usize,
    pub p: usize,
    pub theta: f64,
    #[serde(default)]
    pub gamma_0: f64,
    pub gamma_x: Vec<f64>,
    #[serde(default)]
    pub gamma_u: f64,
    pub beta_x: Vec<f64>,
    #[serde(default)]
    pub beta_u: f64,
    pub noise_sd: f64,
    /// Slope of the treatment effect in the first covariate.
    #[serde(default)]
    pub effect_x1: f64,
    #[serde(default)]
    pub seed: u64,
}

impl DgpConfig {
    /// Unconfounded three-covariate reference design.
    pub fn reference(n: usize, seed: u64) -> Self {
        Self {
            n,
            p: 3,
            theta: 0.5,
            gamma_0: 0.0,
            gamma_x: vec![0.5, -0.5, 0.25],
            gamma_u: 0.0,
            beta_x: vec![1.0, 0.5, -0.5],
            beta_u: 0.0,
            noise_sd: 1.0,
            effect_x1: 0.0,
            seed,
        }
    }

    /// Reference design with a latent confounder of the given strength.
    pub fn confounded(n: usize, gamma_u: f64, beta_u: f64, seed: u64) -> Self {
        Self { gamma_u, beta_u, ..Self::reference(n, seed) }
    }

    /// Reference design plus an observed covariate `x4` drawn and weighted
    /// exactly like the latent confounder.
    pub fn twin(n: usize, gamma_u: f64, beta_u: f64, seed: u64) -> Self {
        let mut cfg = Self::confounded(n, gamma_u, beta_u, seed);
        cfg.p = 4;
        cfg.gamma_x.push(gamma_u);
        cfg.beta_x.push(beta_u);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.p < 1 {
            return bad("p must be >= 1".into());
        }
        if self.gamma_x.len() != self.p || self.beta_x.len() != self.p {
            return bad(format!(
                "gamma_x has {} and beta_x has {} entries, expected p = {}",
                self.gamma_x.len(),
                self.beta_x.len(),
                self.p
            ));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return bad(format!("noise_sd must be > 0, got {}", self.noise_sd));
        }
        let all = [self.theta, self.gamma_0, self.gamma_u, self.beta_u, self.effect_x1];
        if all.iter().chain(&self.gamma_x).chain(&self.beta_x).any(|v| !v.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        Ok(())
    }

    /// `P(D = 1 | X = x)` when the latent confounder does not enter treatment.
    pub fn propensity_given_x(&self, x: &[f64]) -> Option<f64> {
        (self.gamma_u == 0.0).then(|| sigmoid(self.linear_treatment(x)))
    }

    fn linear_treatment(&self, x: &[f64]) -> f64 {
        self.gamma_0 + self.gamma_x.iter().zip(x).map(|(g, v)| g * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub ds: Dataset,
    pub u: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
}

/// Mixes a master seed with an index into an independent stream seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn simulate(cfg: &DgpConfig) -> Result<SimData> {
    cfg.validate()?;
    let (n, p) = (cfg.n, cfg.p);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = Matrix::zeros(n, p);
    let mut u = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut y0 = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..p {
            x.set(i, j, rng.sample(StandardNormal));
        }
        let ui: f64 = rng.sample(StandardNormal);
        let row = x.row(i);
        let prob = sigmoid(cfg.linear_treatment(row) + cfg.gamma_u * ui);
        let di = if rng.random::<f64>() < prob { 1.0 } else { 0.0 };
        let noise: f64 = rng.sample(StandardNormal);
        let base = cfg.beta_x.iter().zip(row).map(|(b, v)| b * v).sum::<f64>() + cfg.beta_u * ui + cfg.noise_sd * noise;
        let effect = cfg.theta + cfg.effect_x1 * row[0];
        let (v0, v1) = (base, base + effect);
        y.push(if di == 1.0 { v1 } else { v0 });
        u.push(ui);
        d.push(di);
        y0.push(v0);
        y1.push(v1);
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    let ds = Dataset::new(y, d, x, names)?;
    Ok(SimData { ds, u, y0, y1 })
}

/// Sample ATT from the potential outcomes: mean of `y1 - y0` over treated rows.
pub fn oracle_att(sim: &SimData) -> Result<f64> {
    let diffs: Vec<f64> = (0..sim.ds.n()).filter(|&i| sim.ds.treated(i)).map(|i| sim.y1[i] - sim.y0[i]).collect();
    if diffs.is_empty() {
        return Err(Error::EmptyArm { arm: "treated" });
    }
    Ok(mean(&diffs))
}

/// Sample ATE from the potential outcomes.
pub fn oracle_ate(sim: &SimData) -> f64 {
    let diffs: Vec<f64> = sim.y1.iter().zip(&sim.y0).map(|(a, b)| a - b).collect();
    mean(&diffs)
}

/// Confounding strength of the latent variable, measured by benchmarking
/// with `U` actually observed: the long model uses `(X, U)`, the short `X`.
pub fn oracle_confounding(
    sim: &SimData,
    folds: &FoldAssignment,
    settings: &DmlSettings,
    estimand: &Estimand,
) -> Result<SensitivityParams> {
    let with_u = sim.ds.with_covariate(LATENT_NAME, &sim.u)?;
    let b = benchmark(&with_u, &[LATENT_NAME.to_string()], folds, settings, estimand)?;
    Ok(b.params())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSettings {
    pub dml: DmlSettings,
    pub estimand: Estimand,
    /// Size of the single draw used to calibrate the oracle parameters.
    pub calibration_n: usize,
}

impl Default for CoverageSettings {
    fn default() -> Self {
        Self { dml: DmlSettings::default(), estimand: Estimand::att(), calibration_n: 400_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub seed: u64,
    pub oracle: f64,
    pub theta_hat: f64,
    pub se: f64,
    pub naive_covers: bool,
    pub bound_covers: bool,
    pub bound_ci_covers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub reps: usize,
    pub calibrated: SensitivityParams,
    pub naive_ci_coverage: f64,
    pub bound_coverage: f64,
    pub bound_ci_coverage: f64,
    /// Mean of `theta_hat - oracle` across reps.
    pub mean_bias: f64,
    pub mean_se: f64,
    pub outcomes: Vec<RepOutcome>,
}

fn covers(lo: f64, hi: f64, v: f64) -> bool {
    lo <= v && v <= hi
}

/// Calibrates the oracle confounding parameters on one large draw, then
/// repeatedly simulates, estimates the short-model effect and checks which
/// intervals cover the sample oracle effect.
pub fn coverage_experiment(cfg: &DgpConfig, reps: usize, settings: &CoverageSettings) -> Result<CoverageReport> {
    if reps < 1 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    cfg.validate()?;
    let estimand = settings.estimand;

    let calib_cfg = DgpConfig { n: settings.calibration_n, seed: derive_seed(cfg.seed, u64::MAX), ..cfg.clone() };
    let calib = simulate(&calib_cfg)?;
    let calib_folds = make_folds(calib_cfg.n, settings.dml.n_folds, calib_cfg.seed)?;
    let calibrated = oracle_confounding(&calib, &calib_folds, &settings.dml, &estimand)?;

    let outcomes: Vec<RepOutcome> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(cfg.seed, rep as u64);
            let sim = simulate(&DgpConfig { seed, ..cfg.clone() })?;
            let oracle = match estimand.kind {
                crate::model::EstimandKind::Att => oracle_att(&sim)?,
                crate::model::EstimandKind::Ate => oracle_ate(&sim),
            };
            let fit = fit_dml(&sim.ds, &estimand, &DmlSettings { seed, ..settings.dml.clone() })?;
            let est = &fit.estimate;
            let s = sensitivity_analysis(est, &fit.sensitivity, &calibrated, estimand.h0, estimand.level)?;
            Ok(RepOutcome {
                rep,
                seed,
                oracle,
                theta_hat: est.theta_hat,
                se: est.se,
                naive_covers: covers(est.ci.0, est.ci.1, oracle),
                bound_covers: covers(s.theta_lower, s.theta_upper, oracle),
                bound_ci_covers: covers(s.ci_lower, s.ci_upper, oracle),
            })
        })
        .collect::<Result<_>>()?;

    let share = |f: fn(&RepOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / reps as f64;
    Ok(CoverageReport {
        reps,
        calibrated,
        naive_ci_coverage: share(|o| o.naive_covers),
        bound_coverage: share(|o| o.bound_covers),
        bound_ci_coverage: share(|o| o.bound_ci_covers),
        mean_bias: outcomes.iter().map(|o| o.theta_hat - o.oracle).sum::<f64>() / reps as f64,
        mean_se: outcomes.iter().map(|o| o.se).sum::<f64>() / reps as f64,
        outcomes,
    })
}
