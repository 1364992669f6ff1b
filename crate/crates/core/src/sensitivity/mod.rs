//! Omitted-variable-bias bounds, robustness values, benchmarking and
//! contour grids.

mod benchmark;
mod bounds;
mod contour;
mod robustness;

pub use benchmark::{benchmark, compare, BenchmarkResult};
pub use bounds::{bias_bound, bound_ci, bound_se, cd2_of, theta_bounds};
pub use contour::{contour_grid, AxisSpec, BoundSelector, ContourGrid, ContourRequest, ScenarioMark};
pub use robustness::{robustness_value, robustness_value_a, robustness_value_bisect, RV_BRACKET_MAX};

use crate::error::{Error, Result};
use crate::model::{EstimateResult, SensitivityInput, SensitivityParams, SensitivityResult};

fn optional_rv(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoFiniteRv) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Bounds, confidence bounds and robustness values for one scenario.
/// Robustness values use the scenario's `rho`.
pub fn sensitivity_analysis(
    est: &EstimateResult,
    sens: &SensitivityInput,
    params: &SensitivityParams,
    h0: f64,
    level: f64,
) -> Result<SensitivityResult> {
    let bias = bias_bound(sens.sigma2, sens.nu2, params)?;
    let (theta_lower, theta_upper) = theta_bounds(est.theta_hat, bias);
    let (se_lower, se_upper) = bound_se(est, sens, params)?;
    let (ci_lower, ci_upper) = bound_ci((theta_lower, theta_upper), (se_lower, se_upper), level)?;
    let rv = optional_rv(robustness_value(est.theta_hat, h0, sens.sigma2, sens.nu2, params.rho))?;
    let rva = optional_rv(robustness_value_a(est, sens, h0, level, params.rho))?;
    Ok(SensitivityResult {
        params: *params,
        theta_hat: est.theta_hat,
        bias,
        theta_lower,
        theta_upper,
        se_lower,
        se_upper,
        ci_lower,
        ci_upper,
        h0,
        level,
        rv,
        rva,
    })
}
