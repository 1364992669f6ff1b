use serde::{Deserialize, Serialize};

use super::scores::{ate_score_parts, att_score_parts, riesz_ate, riesz_att};
use super::NuisanceFits;
use crate::error::{Error, Result};
use crate::model::{Dataset, Estimand, EstimandKind, EstimateResult};
use crate::stats::{mean, normal_quantile, sd};

/// How `E[alpha^2]` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nu2Moment {
    /// Mean of the squared Riesz values.
    #[default]
    PlugIn,
    /// Mean of `2 m(W, alpha) - alpha^2`, the functional applied to the
    /// representer minus its square.
    DoublyRobust,
}

fn check_lengths(ds: &Dataset, fits: &NuisanceFits) -> Result<()> {
    let n = ds.n();
    if fits.g0_hat.len() != n || fits.g1_hat.len() != n || fits.m_hat.len() != n {
        return Err(Error::LengthMismatch("nuisance fits do not match the dataset".into()));
    }
    Ok(())
}

/// Score decomposition `psi_i(theta) = a_i * theta + b_i`.
fn score_parts(ds: &Dataset, fits: &NuisanceFits, kind: EstimandKind) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = ds.treated_share();
    let mut a = Vec::with_capacity(ds.n());
    let mut b = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let (ai, bi) = match kind {
            EstimandKind::Att => att_score_parts(ds.y()[i], ds.treated(i), fits.g0_hat[i], fits.m_hat[i], p)?,
            EstimandKind::Ate => {
                ate_score_parts(ds.y()[i], ds.treated(i), fits.g0_hat[i], fits.g1_hat[i], fits.m_hat[i])?
            }
        };
        a.push(ai);
        b.push(bi);
    }
    Ok((a, b))
}

/// Mean score as a function of theta, for root-finding cross-checks.
pub fn mean_score(ds: &Dataset, fits: &NuisanceFits, kind: EstimandKind, theta: f64) -> Result<f64> {
    check_lengths(ds, fits)?;
    let (a, b) = score_parts(ds, fits, kind)?;
    Ok(a.iter().zip(&b).map(|(a, b)| a * theta + b).sum::<f64>() / ds.n() as f64)
}

/// Solves the empirical moment condition in closed form (the score is
/// affine in theta) and attaches the influence-function standard error
/// and a two-sided normal confidence interval.
pub fn solve_theta(ds: &Dataset, fits: &NuisanceFits, estimand: &Estimand) -> Result<EstimateResult> {
    check_lengths(ds, fits)?;
    let (a, b) = score_parts(ds, fits, estimand.kind)?;
    let jacobian = mean(&a);
    let theta_hat = -mean(&b) / jacobian;
    let psi: Vec<f64> = a.iter().zip(&b).map(|(a, b)| a * theta_hat + b).collect();
    let n = ds.n() as f64;
    let se = sd(&psi) / n.sqrt() / jacobian.abs();
    let z = normal_quantile(1.0 - (1.0 - estimand.level) / 2.0);
    Ok(EstimateResult {
        theta_hat,
        se,
        psi,
        jacobian,
        p_hat: ds.treated_share(),
        level: estimand.level,
        ci: (theta_hat - z * se, theta_hat + z * se),
    })
}

/// Residual variance of the outcome regression and its centred per-row score.
pub fn estimate_sigma2(ds: &Dataset, fits: &NuisanceFits) -> Result<(f64, Vec<f64>)> {
    check_lengths(ds, fits)?;
    let g = fits.g_hat(ds);
    let sq: Vec<f64> = ds.y().iter().zip(&g).map(|(y, g)| (y - g) * (y - g)).collect();
    let sigma2 = mean(&sq);
    Ok((sigma2, sq.iter().map(|v| v - sigma2).collect()))
}

/// Riesz representer values for every observation.
pub fn riesz_values(ds: &Dataset, m_hat: &[f64], kind: EstimandKind) -> Result<Vec<f64>> {
    let p = ds.treated_share();
    (0..ds.n())
        .map(|i| match kind {
            EstimandKind::Att => riesz_att(ds.treated(i), m_hat[i], p),
            EstimandKind::Ate => riesz_ate(ds.treated(i), m_hat[i]),
        })
        .collect()
}

/// Second moment of the Riesz representer and its centred per-row score.
pub fn estimate_nu2(ds: &Dataset, fits: &NuisanceFits, estimand: &Estimand) -> Result<(f64, Vec<f64>)> {
    estimate_nu2_with(ds, fits, estimand, Nu2Moment::PlugIn)
}

pub fn estimate_nu2_with(
    ds: &Dataset,
    fits: &NuisanceFits,
    estimand: &Estimand,
    moment: Nu2Moment,
) -> Result<(f64, Vec<f64>)> {
    check_lengths(ds, fits)?;
    let alpha = riesz_values(ds, &fits.m_hat, estimand.kind)?;
    let p = ds.treated_share();
    let terms: Vec<f64> = match moment {
        Nu2Moment::PlugIn => alpha.iter().map(|a| a * a).collect(),
        Nu2Moment::DoublyRobust => (0..ds.n())
            .map(|i| {
                let m = fits.m_hat[i];
                let functional = match estimand.kind {
                    // (D/p) * (alpha(1, X) - alpha(0, X))
                    EstimandKind::Att => {
                        if ds.treated(i) {
                            1.0 / (p * p * (1.0 - m))
                        } else {
                            0.0
                        }
                    }
                    EstimandKind::Ate => 1.0 / (m * (1.0 - m)),
                };
                2.0 * functional - alpha[i] * alpha[i]
            })
            .collect(),
    };
    let nu2 = mean(&terms);
    Ok((nu2, terms.iter().map(|v| v - nu2).collect()))
}
