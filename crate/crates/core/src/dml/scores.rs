//! Analytic Riesz representers and Neyman-orthogonal scores.

use crate::error::{Error, Result};

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie strictly inside (0, 1), got {v}")))
    }
}

/// ATT Riesz representer `(d/m - (1-d)/(1-m)) * m/p`.
pub fn riesz_att(treated: bool, m: f64, p: f64) -> Result<f64> {
    open_unit("propensity", m)?;
    open_unit("treated share", p)?;
    Ok(if treated { 1.0 / p } else { -m / ((1.0 - m) * p) })
}

/// ATE Riesz representer `d/m - (1-d)/(1-m)`.
pub fn riesz_ate(treated: bool, m: f64) -> Result<f64> {
    open_unit("propensity", m)?;
    Ok(if treated { 1.0 / m } else { -1.0 / (1.0 - m) })
}

/// Orthogonal ATT score; affine in `theta` with slope `-d/p`.
pub fn att_score(y: f64, treated: bool, g0: f64, m: f64, p: f64, theta: f64) -> Result<f64> {
    let (a, b) = att_score_parts(y, treated, g0, m, p)?;
    Ok(a * theta + b)
}

/// `(slope, intercept)` of the ATT score in theta.
pub(crate) fn att_score_parts(y: f64, treated: bool, g0: f64, m: f64, p: f64) -> Result<(f64, f64)> {
    open_unit("propensity", m)?;
    open_unit("treated share", p)?;
    let r = y - g0;
    Ok(if treated { (-1.0 / p, r / p) } else { (0.0, -m / ((1.0 - m) * p) * r) })
}

/// Augmented inverse-propensity ATE score.
pub fn ate_score(y: f64, treated: bool, g0: f64, g1: f64, m: f64, theta: f64) -> Result<f64> {
    let (a, b) = ate_score_parts(y, treated, g0, g1, m)?;
    Ok(a * theta + b)
}

pub(crate) fn ate_score_parts(y: f64, treated: bool, g0: f64, g1: f64, m: f64) -> Result<(f64, f64)> {
    let alpha = riesz_ate(treated, m)?;
    let g_d = if treated { g1 } else { g0 };
    Ok((-1.0, g1 - g0 + alpha * (y - g_d)))
}
