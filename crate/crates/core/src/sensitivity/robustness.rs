use super::bounds::{bias_bound, bound_ci, bound_se, theta_bounds};
use crate::error::{Error, Result};
use crate::model::{EstimateResult, SensitivityInput, SensitivityParams};

/// Upper end of the search interval for robustness values.
pub const RV_BRACKET_MAX: f64 = 1.0 - 1e-9;
const MAX_BISECTIONS: usize = 200;

/// Smallest common value `rv = cf_y = cf_d` at which the bias bound reaches
/// `|theta_hat - h0|`.
///
/// With `a = Δ² / (rho² sigma² nu²)` the condition `rv² / (1 - rv) = a`
/// gives `rv = 2 / (1 + sqrt(1 + 4/a))`.
pub fn robustness_value(theta_hat: f64, h0: f64, sigma2: f64, nu2: f64, rho: f64) -> Result<f64> {
    let delta = (theta_hat - h0).abs();
    if delta == 0.0 {
        return Ok(0.0);
    }
    let scale2 = rho * rho * sigma2 * nu2;
    if !(scale2 > 0.0) {
        return Err(Error::NoFiniteRv);
    }
    let a = delta * delta / scale2;
    Ok(2.0 / (1.0 + (1.0 + 4.0 / a).sqrt()))
}

/// Same quantity by bisection on the bias bound; used as a cross-check.
pub fn robustness_value_bisect(theta_hat: f64, h0: f64, sigma2: f64, nu2: f64, rho: f64) -> Result<f64> {
    let delta = (theta_hat - h0).abs();
    if delta == 0.0 {
        return Ok(0.0);
    }
    let bias_at = |rv: f64| bias_bound(sigma2, nu2, &SensitivityParams { cf_y: rv, cf_d: rv, rho });
    if bias_at(RV_BRACKET_MAX)? < delta {
        return Err(Error::NoFiniteRv);
    }
    let (mut lo, mut hi) = (0.0, RV_BRACKET_MAX);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if bias_at(mid)? >= delta {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(hi)
}

/// Smallest common `rv` at which the relevant one-sided confidence bound
/// (lower when `theta_hat > h0`, upper otherwise) reaches `h0`. Zero when
/// the confidence bound already includes `h0` without confounding.
pub fn robustness_value_a(est: &EstimateResult, sens: &SensitivityInput, h0: f64, level: f64, rho: f64) -> Result<f64> {
    let delta = est.theta_hat - h0;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let gap = |rv: f64| -> Result<f64> {
        let params = SensitivityParams { cf_y: rv, cf_d: rv, rho };
        let bias = bias_bound(sens.sigma2, sens.nu2, &params)?;
        let ses = bound_se(est, sens, &params)?;
        let (lo, hi) = bound_ci(theta_bounds(est.theta_hat, bias), ses, level)?;
        Ok(if delta > 0.0 { lo - h0 } else { h0 - hi })
    };
    if gap(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let rv = robustness_value(est.theta_hat, h0, sens.sigma2, sens.nu2, rho)?;
    let mut hi = rv.min(RV_BRACKET_MAX);
    if gap(hi)? > 0.0 {
        // only reachable through rounding at the point-estimate RV
        hi = RV_BRACKET_MAX;
        if gap(hi)? > 0.0 {
            return Err(Error::NoFiniteRv);
        }
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(hi.min(rv))
}
