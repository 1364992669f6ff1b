use serde::{Deserialize, Serialize};

use crate::dml::{fit_dml_with_folds, riesz_values, DmlFit, DmlSettings, FoldAssignment};
use crate::error::{Error, Result};
use crate::model::{Dataset, Estimand, SensitivityParams};
use crate::stats::correlation;

/// Confounding strength implied by omitting a set of observed covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub benchmark_vars: Vec<String>,
    pub cf_y: f64,
    pub cf_d: f64,
    pub rho_hat: f64,
    /// `theta_short - theta_long`.
    pub delta_theta: f64,
    pub theta_long: f64,
    pub theta_short: f64,
}

impl BenchmarkResult {
    pub fn params(&self) -> SensitivityParams {
        SensitivityParams { cf_y: self.cf_y, cf_d: self.cf_d, rho: self.rho_hat }
    }
}

/// Compares a long model on all covariates with a short model that drops
/// `benchmark_vars`, using the same folds and learners for both.
pub fn benchmark(
    ds: &Dataset,
    benchmark_vars: &[String],
    folds: &FoldAssignment,
    settings: &DmlSettings,
    estimand: &Estimand,
) -> Result<BenchmarkResult> {
    if benchmark_vars.is_empty() {
        return Err(Error::InvalidConfig("benchmark set is empty".into()));
    }
    let short_ds = ds.drop_covariates(benchmark_vars)?;
    let long = fit_dml_with_folds(ds, estimand, settings, folds)?;
    let short = fit_dml_with_folds(&short_ds, estimand, settings, folds)?;
    compare(ds, benchmark_vars, &long, &short, estimand)
}

/// Benchmark statistics from already fitted long and short models.
pub fn compare(
    ds: &Dataset,
    benchmark_vars: &[String],
    long: &DmlFit,
    short: &DmlFit,
    estimand: &Estimand,
) -> Result<BenchmarkResult> {
    let (s2_long, s2_short) = (long.sensitivity.sigma2, short.sensitivity.sigma2);
    let (nu2_long, nu2_short) = (long.sensitivity.nu2, short.sensitivity.nu2);
    let cf_y = if s2_short > 0.0 { ((s2_short - s2_long) / s2_short).clamp(0.0, 1.0) } else { 0.0 };
    let cf_d = if nu2_long > 0.0 { ((nu2_long - nu2_short) / nu2_long).clamp(0.0, 1.0 - 1e-12) } else { 0.0 };

    let g_long = long.fits.g_hat(ds);
    let g_short = short.fits.g_hat(ds);
    let a_long = riesz_values(ds, &long.fits.m_hat, estimand.kind)?;
    let a_short = riesz_values(ds, &short.fits.m_hat, estimand.kind)?;
    let dg: Vec<f64> = g_long.iter().zip(&g_short).map(|(l, s)| l - s).collect();
    let da: Vec<f64> = a_long.iter().zip(&a_short).map(|(l, s)| l - s).collect();
    let rho_hat = correlation(&dg, &da).clamp(-1.0, 1.0);

    Ok(BenchmarkResult {
        benchmark_vars: benchmark_vars.to_vec(),
        cf_y,
        cf_d,
        rho_hat,
        delta_theta: short.estimate.theta_hat - long.estimate.theta_hat,
        theta_long: long.estimate.theta_hat,
        theta_short: short.estimate.theta_hat,
    })
}
