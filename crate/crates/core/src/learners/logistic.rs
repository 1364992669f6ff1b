use nalgebra::{DMatrix, DVector};

use super::Predictor;
use crate::model::Matrix;
use crate::stats::sigmoid;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-10;

/// Logistic regression fitted by penalised Newton-Raphson (IRLS). The
/// intercept is not penalised.
#[derive(Debug, Clone)]
pub(crate) struct Logistic {
    intercept: f64,
    coef: Vec<f64>,
}

impl Logistic {
    #[cfg(test)]
    pub(crate) fn coefficients(&self) -> &[f64] {
        &self.coef
    }
}

impl Predictor for Logistic {
    fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>())
    }
}

fn objective(design: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, penalty: f64) -> f64 {
    let eta = design * beta;
    let mut ll = 0.0;
    for (e, t) in eta.iter().zip(y) {
        // log(1 + exp(e)) computed stably
        let softplus = if *e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
        ll += t * e - softplus;
    }
    let pen: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    ll - 0.5 * penalty * pen
}

pub(crate) fn fit(x: &Matrix, y: &[f64], penalty: f64) -> Logistic {
    let (n, p) = (x.nrows(), x.ncols());
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x.get(i, j - 1) });
    let mut beta = DVector::zeros(p + 1);
    let rate = y.iter().sum::<f64>() / n as f64;
    beta[0] = (rate / (1.0 - rate)).ln();
    let mut current = objective(&design, y, &beta, penalty);

    for _ in 0..MAX_ITER {
        let eta = &design * &beta;
        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let mut grad = DVector::zeros(p + 1);
        let mut hess = DMatrix::zeros(p + 1, p + 1);
        for i in 0..n {
            let r = y[i] - mu[i];
            let w = (mu[i] * (1.0 - mu[i])).max(1e-12);
            let row = design.row(i);
            for a in 0..=p {
                grad[a] += row[a] * r;
                for b in a..=p {
                    hess[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..=p {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        for j in 1..=p {
            grad[j] -= penalty * beta[j];
            hess[(j, j)] += penalty;
        }
        // tiny ridge on the Newton system keeps separable data solvable
        for j in 0..=p {
            hess[(j, j)] += 1e-10;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => match hess.svd(true, true).solve(&grad, 1e-12) {
                Ok(s) => s,
                Err(_) => break,
            },
        };

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate = &beta + &step * scale;
            let value = objective(&design, y, &candidate, penalty);
            if value >= current - 1e-12 * current.abs().max(1.0) {
                beta = candidate;
                current = value;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || step.amax() * scale < TOL {
            break;
        }
    }

    Logistic { intercept: beta[0], coef: beta.iter().skip(1).copied().collect() }
}
