use serde::{Deserialize, Serialize};

use super::{fit_classifier, fit_regressor, LearnerConfig};
use crate::dml::make_folds;
use crate::error::{Error, Result};
use crate::model::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Squared-error loss.
    Regression,
    /// Log loss on clipped probabilities; targets must be 0/1.
    Classification,
}

/// Mean out-of-fold loss of one candidate over `k` folds.
pub fn cv_loss(x: &Matrix, y: &[f64], cfg: &LearnerConfig, k: usize, seed: u64, task: Task) -> Result<f64> {
    let folds = make_folds(x.nrows(), k, seed)?;
    let mut total = 0.0;
    for fold in 0..k {
        let (train, test) = folds.split(fold);
        let xt = x.select_rows(&train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let xv = x.select_rows(&test);
        match task {
            Task::Regression => {
                let model = fit_regressor(&xt, &yt, cfg)?;
                for (p, &i) in model.predict(&xv).iter().zip(&test) {
                    total += (y[i] - p).powi(2);
                }
            }
            Task::Classification => {
                let model = fit_classifier(&xt, &yt, cfg)?;
                for (p, &i) in model.predict(&xv).iter().zip(&test) {
                    total -= y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln();
                }
            }
        }
    }
    Ok(total / x.nrows() as f64)
}

/// Picks the candidate with the lowest mean out-of-fold loss. Ties go to
/// the earlier candidate.
pub fn tune_by_cv(
    x: &Matrix,
    y: &[f64],
    candidates: &[LearnerConfig],
    k: usize,
    seed: u64,
    task: Task,
) -> Result<LearnerConfig> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("tune_by_cv needs at least one candidate".into()));
    }
    if candidates.len() == 1 {
        return Ok(candidates[0].clone());
    }
    let mut best: Option<(f64, usize)> = None;
    for (idx, cfg) in candidates.iter().enumerate() {
        let loss = cv_loss(x, y, cfg, k, seed, task)?;
        log::debug!("cv candidate {idx}: loss {loss}");
        if best.is_none_or(|(b, _)| loss < b) {
            best = Some((loss, idx));
        }
    }
    Ok(candidates[best.expect("non-empty candidates").1].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::TreeParams;

    fn linear_data(n: usize) -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.731).sin() * 3.0).collect();
        let y: Vec<f64> = xs.iter().enumerate().map(|(i, x)| 4.0 * x + 0.1 * ((i * 7 % 11) as f64 - 5.0)).collect();
        (Matrix::new(n, 1, xs).unwrap(), y)
    }

    #[test]
    fn single_candidate_returned() {
        let (x, y) = linear_data(20);
        let c = LearnerConfig::ridge(3.0);
        assert_eq!(tune_by_cv(&x, &y, std::slice::from_ref(&c), 5, 0, Task::Regression).unwrap(), c);
    }

    #[test]
    fn weak_penalty_wins_on_linear_data() {
        let (x, y) = linear_data(200);
        let cands = [LearnerConfig::ridge(1e6), LearnerConfig::ridge(0.01)];
        // oracle: compare the two CV losses directly
        let heavy = cv_loss(&x, &y, &cands[0], 5, 1, Task::Regression).unwrap();
        let light = cv_loss(&x, &y, &cands[1], 5, 1, Task::Regression).unwrap();
        assert!(light < heavy);
        assert_eq!(tune_by_cv(&x, &y, &cands, 5, 1, Task::Regression).unwrap(), cands[1]);
    }

    #[test]
    fn ties_go_to_first_candidate() {
        let (x, y) = linear_data(60);
        let a = LearnerConfig::ridge(1.0);
        let b = LearnerConfig::ridge(1.0).with_clip_eps(0.02);
        assert_eq!(tune_by_cv(&x, &y, &[a.clone(), b], 3, 2, Task::Regression).unwrap(), a);
    }

    #[test]
    fn classification_uses_log_loss() {
        let xs: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
        let labels: Vec<f64> = xs.iter().map(|&x| if x > 0.1 { 1.0 } else { 0.0 }).collect();
        let x = Matrix::new(300, 1, xs).unwrap();
        let cands = [
            LearnerConfig::boosted_trees(TreeParams { n_trees: 1, learning_rate: 0.01, ..TreeParams::default() }),
            LearnerConfig::boosted_trees(TreeParams::default()),
        ];
        assert_eq!(tune_by_cv(&x, &labels, &cands, 4, 0, Task::Classification).unwrap(), cands[1]);
    }

    #[test]
    fn bad_fold_count_propagates() {
        let (x, y) = linear_data(10);
        let cands = [LearnerConfig::ridge(1.0), LearnerConfig::ridge(2.0)];
        assert!(matches!(tune_by_cv(&x, &y, &cands, 1, 0, Task::Regression), Err(Error::InvalidFoldCount { .. })));
    }
}
