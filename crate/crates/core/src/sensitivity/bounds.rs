use crate::error::{Error, Result};
use crate::model::{EstimateResult, SensitivityInput, SensitivityParams};
use crate::stats::{normal_quantile, sd};

/// Odds-scale treatment parameter `cf_d / (1 - cf_d)`.
pub fn cd2_of(cf_d: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&cf_d) {
        return Err(Error::Domain(format!("cf_d must lie in [0, 1), got {cf_d}")));
    }
    Ok(cf_d / (1.0 - cf_d))
}

/// Worst-case absolute omitted-variable bias
/// `sqrt(rho² · cf_y · cf_d/(1-cf_d) · sigma² · nu²)`.
pub fn bias_bound(sigma2: f64, nu2: f64, params: &SensitivityParams) -> Result<f64> {
    if !(sigma2 >= 0.0 && nu2 >= 0.0) {
        return Err(Error::Domain(format!("sigma2 and nu2 must be >= 0, got {sigma2}, {nu2}")));
    }
    params.validate()?;
    let cd2 = cd2_of(params.cf_d)?;
    Ok((params.rho * params.rho * params.cf_y * cd2 * sigma2 * nu2).sqrt())
}

pub fn theta_bounds(theta_hat: f64, bias: f64) -> (f64, f64) {
    (theta_hat - bias, theta_hat + bias)
}

/// Standard errors of the lower and upper bound.
///
/// The bias influence is `db/dsigma2 * psi_sigma2 + db/dnu2 * psi_nu2`; the
/// lower bound subtracts it from the estimate's influence, the upper bound
/// adds it.
pub fn bound_se(est: &EstimateResult, sens: &SensitivityInput, params: &SensitivityParams) -> Result<(f64, f64)> {
    let n = est.n();
    if sens.psi_sigma2.len() != n || sens.psi_nu2.len() != n {
        return Err(Error::LengthMismatch("sensitivity scores differ in length from the estimate".into()));
    }
    let b = bias_bound(sens.sigma2, sens.nu2, params)?;
    let (d_sigma2, d_nu2) = if b > 0.0 { (b / (2.0 * sens.sigma2), b / (2.0 * sens.nu2)) } else { (0.0, 0.0) };
    let influence = est.influence();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for ((inf, s2), v2) in influence.iter().zip(&sens.psi_sigma2).zip(&sens.psi_nu2) {
        let psi_b = d_sigma2 * s2 + d_nu2 * v2;
        lower.push(inf - psi_b);
        upper.push(inf + psi_b);
    }
    let root_n = (n as f64).sqrt();
    Ok((sd(&lower) / root_n, sd(&upper) / root_n))
}

/// One-sided confidence bounds `(lower - z·se_lower, upper + z·se_upper)`
/// with `z = Phi^{-1}(level)`.
pub fn bound_ci(bounds: (f64, f64), ses: (f64, f64), level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    let z = normal_quantile(level);
    Ok((bounds.0 - z * ses.0, bounds.1 + z * ses.1))
}
