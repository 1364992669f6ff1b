use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FoldAssignment;
use crate::error::{Error, Result};
use crate::learners::{fit_classifier, fit_regressor, LearnerConfig};
use crate::model::Dataset;

/// Out-of-fold nuisance predictions for every observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceFits {
    pub g0_hat: Vec<f64>,
    pub g1_hat: Vec<f64>,
    /// Clipped propensity predictions.
    pub m_hat: Vec<f64>,
    pub folds: FoldAssignment,
    pub eps: f64,
}

impl NuisanceFits {
    /// `g(D_i, X_i)`: the outcome regression evaluated at the observed treatment.
    pub fn g_hat(&self, ds: &Dataset) -> Vec<f64> {
        (0..ds.n()).map(|i| if ds.treated(i) { self.g1_hat[i] } else { self.g0_hat[i] }).collect()
    }
}

struct FoldPredictions {
    rows: Vec<usize>,
    g0: Vec<f64>,
    g1: Vec<f64>,
    m: Vec<f64>,
}

fn fit_fold(
    ds: &Dataset,
    folds: &FoldAssignment,
    fold: usize,
    cfg_g: &LearnerConfig,
    cfg_m: &LearnerConfig,
) -> Result<FoldPredictions> {
    let (train, test) = folds.split(fold);
    let (treated, control): (Vec<usize>, Vec<usize>) = train.iter().partition(|&&i| ds.treated(i));
    if treated.is_empty() {
        return Err(Error::EmptyArmInFold { fold, arm: "treated" });
    }
    if control.is_empty() {
        return Err(Error::EmptyArmInFold { fold, arm: "control" });
    }
    let x = ds.x();
    let y = ds.y();
    let targets = |rows: &[usize]| rows.iter().map(|&i| y[i]).collect::<Vec<f64>>();

    let g0 = fit_regressor(&x.select_rows(&control), &targets(&control), cfg_g)?;
    let g1 = fit_regressor(&x.select_rows(&treated), &targets(&treated), cfg_g)?;
    let labels: Vec<f64> = train.iter().map(|&i| f64::from(ds.d()[i])).collect();
    let m = fit_classifier(&x.select_rows(&train), &labels, cfg_m)?;

    let xt = x.select_rows(&test);
    Ok(FoldPredictions { g0: g0.predict(&xt), g1: g1.predict(&xt), m: m.predict(&xt), rows: test })
}

/// Cross-fits `g(0, X)`, `g(1, X)` and `m(X)`: each observation is predicted
/// by models trained on the other folds only. Outcome models are fitted on
/// the control (resp. treated) rows of the training complement, the
/// propensity model on all of it; propensities are clipped to
/// `[eps, 1 - eps]`.
pub fn cross_fit_nuisances(
    ds: &Dataset,
    folds: &FoldAssignment,
    cfg_g: &LearnerConfig,
    cfg_m: &LearnerConfig,
    eps: f64,
) -> Result<NuisanceFits> {
    if folds.n() != ds.n() {
        return Err(Error::LengthMismatch(format!("folds cover {} rows, data has {}", folds.n(), ds.n())));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidEps(eps));
    }
    cfg_g.validate()?;
    let cfg_m = cfg_m.clone().with_clip_eps(eps);

    // collected in fold order, so the result does not depend on scheduling
    let per_fold: Vec<FoldPredictions> = (0..folds.n_folds())
        .into_par_iter()
        .map(|fold| fit_fold(ds, folds, fold, cfg_g, &cfg_m))
        .collect::<Result<_>>()?;

    let n = ds.n();
    let mut fits =
        NuisanceFits { g0_hat: vec![0.0; n], g1_hat: vec![0.0; n], m_hat: vec![0.0; n], folds: folds.clone(), eps };
    for fp in per_fold {
        for (k, &i) in fp.rows.iter().enumerate() {
            fits.g0_hat[i] = fp.g0[k];
            fits.g1_hat[i] = fp.g1[k];
            fits.m_hat[i] = fp.m[k];
        }
    }
    Ok(fits)
}
