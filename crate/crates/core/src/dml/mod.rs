//! Cross-fitted debiased estimation of ATT and ATE.

mod crossfit;
mod estimate;
mod folds;
mod scores;

pub use crossfit::{cross_fit_nuisances, NuisanceFits};
pub use estimate::{
    estimate_nu2, estimate_nu2_with, estimate_sigma2, mean_score, riesz_values, solve_theta, Nu2Moment,
};
pub use folds::{make_folds, FoldAssignment};
pub use scores::{ate_score, att_score, riesz_ate, riesz_att};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::learners::{LearnerConfig, DEFAULT_CLIP_EPS};
use crate::model::{Dataset, Estimand, EstimateResult, SensitivityInput};

pub const DEFAULT_FOLDS: usize = 5;

/// Everything needed to run one cross-fitted estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmlSettings {
    pub learner_g: LearnerConfig,
    pub learner_m: LearnerConfig,
    pub n_folds: usize,
    pub seed: u64,
    pub clip_eps: f64,
    pub nu2_moment: Nu2Moment,
}

impl Default for DmlSettings {
    fn default() -> Self {
        Self {
            learner_g: LearnerConfig::ridge(1.0),
            learner_m: LearnerConfig::logistic(0.0),
            n_folds: DEFAULT_FOLDS,
            seed: 0,
            clip_eps: DEFAULT_CLIP_EPS,
            nu2_moment: Nu2Moment::PlugIn,
        }
    }
}

/// Output of a full estimation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DmlFit {
    pub fits: NuisanceFits,
    pub estimate: EstimateResult,
    pub sensitivity: SensitivityInput,
}

/// Folds, nuisances, the score root and the sigma²/nu² inputs in one call.
pub fn fit_dml(ds: &Dataset, estimand: &Estimand, settings: &DmlSettings) -> Result<DmlFit> {
    let folds = make_folds(ds.n(), settings.n_folds, settings.seed)?;
    fit_dml_with_folds(ds, estimand, settings, &folds)
}

pub fn fit_dml_with_folds(
    ds: &Dataset,
    estimand: &Estimand,
    settings: &DmlSettings,
    folds: &FoldAssignment,
) -> Result<DmlFit> {
    let fits = cross_fit_nuisances(ds, folds, &settings.learner_g, &settings.learner_m, settings.clip_eps)?;
    let estimate = solve_theta(ds, &fits, estimand)?;
    let (sigma2, psi_sigma2) = estimate_sigma2(ds, &fits)?;
    let (nu2, psi_nu2) = estimate_nu2_with(ds, &fits, estimand, settings.nu2_moment)?;
    Ok(DmlFit { fits, estimate, sensitivity: SensitivityInput { sigma2, nu2, psi_sigma2, psi_nu2 } })
}
