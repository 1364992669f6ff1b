//! Nuisance learners with a uniform fit/predict contract.
//!
//! Three families are built in: ridge regression, L2-penalised logistic
//! regression and histogram gradient-boosted trees. Other families can be
//! plugged in by implementing [`Predictor`] and wrapping the model with
//! [`FittedRegressor::from_model`] / [`FittedClassifier::from_model`].

mod cv;
mod logistic;
mod ridge;
mod trees;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Matrix;

pub use cv::{cv_loss, tune_by_cv, Task};
pub use trees::TreeParams;

/// Propensity clip used when nothing else is configured.
pub const DEFAULT_CLIP_EPS: f64 = 0.01;

fn default_clip_eps() -> f64 {
    DEFAULT_CLIP_EPS
}

/// Family-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerKind {
    Ridge {
        #[serde(default = "ridge_default_lambda")]
        lambda: f64,
    },
    BoostedTrees(#[serde(default)] TreeParams),
    Logistic {
        #[serde(default)]
        penalty: f64,
    },
}

fn ridge_default_lambda() -> f64 {
    1.0
}

impl LearnerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Ridge { .. } => "ridge",
            LearnerKind::BoostedTrees(_) => "boosted_trees",
            LearnerKind::Logistic { .. } => "logistic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    #[serde(flatten)]
    pub kind: LearnerKind,
    #[serde(default)]
    pub seed: u64,
    /// Probability clip applied to classifier outputs.
    #[serde(default = "default_clip_eps")]
    pub clip_eps: f64,
}

impl LearnerConfig {
    pub fn ridge(lambda: f64) -> Self {
        Self { kind: LearnerKind::Ridge { lambda }, seed: 0, clip_eps: DEFAULT_CLIP_EPS }
    }

    pub fn logistic(penalty: f64) -> Self {
        Self { kind: LearnerKind::Logistic { penalty }, seed: 0, clip_eps: DEFAULT_CLIP_EPS }
    }

    pub fn boosted_trees(params: TreeParams) -> Self {
        Self { kind: LearnerKind::BoostedTrees(params), seed: 0, clip_eps: DEFAULT_CLIP_EPS }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_clip_eps(mut self, eps: f64) -> Self {
        self.clip_eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            LearnerKind::Ridge { lambda } => {
                if !(lambda.is_finite() && *lambda >= 0.0) {
                    return Err(Error::InvalidHyperparameter(format!("ridge lambda must be >= 0, got {lambda}")));
                }
            }
            LearnerKind::Logistic { penalty } => {
                if !(penalty.is_finite() && *penalty >= 0.0) {
                    return Err(Error::InvalidHyperparameter(format!("logistic penalty must be >= 0, got {penalty}")));
                }
            }
            LearnerKind::BoostedTrees(p) => p.validate()?,
        }
        Ok(())
    }
}

/// A fitted model mapping a feature row to a real value. For classifiers the
/// value is a probability.
pub trait Predictor: Send + Sync + fmt::Debug {
    fn predict_row(&self, row: &[f64]) -> f64;
}

#[derive(Debug)]
struct Constant(f64);

impl Predictor for Constant {
    fn predict_row(&self, _row: &[f64]) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct FittedRegressor {
    model: Arc<dyn Predictor>,
}

impl FittedRegressor {
    pub fn from_model(model: Arc<dyn Predictor>) -> Self {
        Self { model }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.model.predict_row(row)
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.nrows()).map(|i| self.model.predict_row(x.row(i))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FittedClassifier {
    model: Arc<dyn Predictor>,
    eps: f64,
}

impl FittedClassifier {
    pub fn from_model(model: Arc<dyn Predictor>, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self { model, eps })
    }

    /// Probability of class 1, clipped to `[eps, 1 - eps]`.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let p = self.model.predict_row(row);
        let p = if p.is_nan() { 0.5 } else { p };
        p.clamp(self.eps, 1.0 - self.eps)
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.nrows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidEps(eps))
    }
}

/// `min(max(p, eps), 1 - eps)`.
pub fn clip_probability(p: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(p.max(eps).min(1.0 - eps))
}

fn check_training_data(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::DegenerateInput(format!("training matrix is {}x{}", x.nrows(), x.ncols())));
    }
    if y.len() != x.nrows() {
        return Err(Error::LengthMismatch(format!("{} targets for {} rows", y.len(), x.nrows())));
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite training value".into()));
    }
    Ok(())
}

pub fn fit_regressor(x: &Matrix, y: &[f64], cfg: &LearnerConfig) -> Result<FittedRegressor> {
    check_training_data(x, y)?;
    cfg.validate()?;
    let model: Arc<dyn Predictor> = match &cfg.kind {
        LearnerKind::Ridge { lambda } => Arc::new(ridge::fit(x, y, *lambda)),
        LearnerKind::BoostedTrees(p) => Arc::new(trees::fit(x, y, p, trees::Loss::Squared, cfg.seed)),
        LearnerKind::Logistic { .. } => return Err(Error::UnsupportedFamily { family: "logistic", task: "regressor" }),
    };
    Ok(FittedRegressor { model })
}

/// Fits a probabilistic classifier. With a single class present a warning
/// is logged and a constant model at the clipped empirical rate is returned.
pub fn fit_classifier(x: &Matrix, labels: &[f64], cfg: &LearnerConfig) -> Result<FittedClassifier> {
    check_training_data(x, labels)?;
    cfg.validate()?;
    check_eps(cfg.clip_eps)?;
    if let Some(v) = labels.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::DegenerateInput(format!("classifier label {v} is not 0/1")));
    }
    let n1 = labels.iter().filter(|&&v| v == 1.0).count();
    if n1 == 0 || n1 == labels.len() {
        log::warn!("single class in classifier training labels; using a constant model");
        let rate = n1 as f64 / labels.len() as f64;
        return FittedClassifier::from_model(Arc::new(Constant(rate)), cfg.clip_eps);
    }
    let model: Arc<dyn Predictor> = match &cfg.kind {
        LearnerKind::Logistic { penalty } => Arc::new(logistic::fit(x, labels, *penalty)),
        LearnerKind::BoostedTrees(p) => Arc::new(trees::fit(x, labels, p, trees::Loss::Logistic, cfg.seed)),
        LearnerKind::Ridge { .. } => return Err(Error::UnsupportedFamily { family: "ridge", task: "classifier" }),
    };
    FittedClassifier::from_model(model, cfg.clip_eps)
}
