use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{robustness_value, robustness_value_a, sensitivity_analysis};
use crate::error::{Error, Result};
use crate::model::{EstimateResult, SensitivityInput, SensitivityParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSelector {
    #[default]
    ThetaLower,
    ThetaUpper,
    CiLower,
    CiUpper,
}

impl BoundSelector {
    pub fn label(&self) -> &'static str {
        match self {
            BoundSelector::ThetaLower => "theta lower",
            BoundSelector::ThetaUpper => "theta upper",
            BoundSelector::CiLower => "CI lower",
            BoundSelector::CiUpper => "CI upper",
        }
    }
}

/// Evenly spaced axis from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps < 2 || !(self.stop > self.start) {
            return Err(Error::Domain(format!("axis needs steps >= 2 and stop > start, got {:?}", self)));
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        let mut v: Vec<f64> = (0..self.steps).map(|k| self.start + h * k as f64).collect();
        v[self.steps - 1] = self.stop;
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMark {
    pub cf_y: f64,
    pub cf_d: f64,
    pub label: String,
}

/// What to evaluate on the `(cf_y, cf_d)` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRequest {
    pub cf_y_axis: Vec<f64>,
    pub cf_d_axis: Vec<f64>,
    pub rho: f64,
    pub h0: f64,
    pub level: f64,
    pub which: BoundSelector,
    pub marks: Vec<ScenarioMark>,
    pub rv_mark: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourGrid {
    pub cf_d_axis: Vec<f64>,
    pub cf_y_axis: Vec<f64>,
    /// `values[i][j]` is the bound at `(cf_y_axis[i], cf_d_axis[j])`.
    pub values: Vec<Vec<f64>>,
    pub which: BoundSelector,
    pub h0: f64,
    pub marks: Vec<ScenarioMark>,
    /// `(rv, rv)` position of the robustness value; RV for point bounds,
    /// RVa for confidence bounds.
    pub rv_mark: Option<(f64, f64)>,
}

fn check_axis(axis: &[f64], name: &str, upper_inclusive: bool) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::Domain(format!("{name} axis is empty")));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!("{name} axis must be strictly increasing")));
    }
    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
    let hi_ok = if upper_inclusive { hi <= 1.0 } else { hi < 1.0 };
    if lo < 0.0 || !hi_ok {
        return Err(Error::Domain(format!("{name} axis leaves its admissible range")));
    }
    Ok(())
}

pub fn contour_grid(est: &EstimateResult, sens: &SensitivityInput, req: &ContourRequest) -> Result<ContourGrid> {
    check_axis(&req.cf_y_axis, "cf_y", true)?;
    check_axis(&req.cf_d_axis, "cf_d", false)?;
    let values: Vec<Vec<f64>> = req
        .cf_y_axis
        .par_iter()
        .map(|&cf_y| {
            req.cf_d_axis
                .iter()
                .map(|&cf_d| {
                    let params = SensitivityParams::new(cf_y, cf_d, req.rho)?;
                    let r = sensitivity_analysis(est, sens, &params, req.h0, req.level)?;
                    Ok(match req.which {
                        BoundSelector::ThetaLower => r.theta_lower,
                        BoundSelector::ThetaUpper => r.theta_upper,
                        BoundSelector::CiLower => r.ci_lower,
                        BoundSelector::CiUpper => r.ci_upper,
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let rv_mark = if req.rv_mark {
        let rv = match req.which {
            BoundSelector::ThetaLower | BoundSelector::ThetaUpper => {
                robustness_value(est.theta_hat, req.h0, sens.sigma2, sens.nu2, req.rho)
            }
            BoundSelector::CiLower | BoundSelector::CiUpper => {
                robustness_value_a(est, sens, req.h0, req.level, req.rho)
            }
        };
        match rv {
            Ok(v) => Some((v, v)),
            Err(Error::NoFiniteRv) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(ContourGrid {
        cf_d_axis: req.cf_d_axis.clone(),
        cf_y_axis: req.cf_y_axis.clone(),
        values,
        which: req.which,
        h0: req.h0,
        marks: req.marks.clone(),
        rv_mark,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values_inclusive() {
        let v = AxisSpec { start: 0.0, stop: 0.1, steps: 3 }.values().unwrap();
        assert_eq!(v, vec![0.0, 0.05, 0.1]);
        assert!(AxisSpec { start: 0.1, stop: 0.1, steps: 3 }.values().is_err());
        assert!(AxisSpec { start: 0.0, stop: 0.1, steps: 1 }.values().is_err());
    }

    #[test]
    fn axis_checks() {
        assert!(check_axis(&[0.0, 0.5, 1.0], "cf_y", true).is_ok());
        assert!(check_axis(&[0.0, 0.5, 1.0], "cf_d", false).is_err());
        assert!(check_axis(&[0.0, 0.5, 0.5], "cf_y", true).is_err());
        assert!(check_axis(&[-0.1, 0.5], "cf_y", true).is_err());
    }
}
