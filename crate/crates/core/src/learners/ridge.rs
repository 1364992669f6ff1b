use nalgebra::{DMatrix, DVector};

use super::Predictor;
use crate::model::Matrix;

/// Ridge regression with an unpenalised intercept.
#[derive(Debug, Clone)]
pub(crate) struct Ridge {
    intercept: f64,
    coef: Vec<f64>,
}

impl Predictor for Ridge {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }
}

pub(crate) fn fit(x: &Matrix, y: &[f64], lambda: f64) -> Ridge {
    let (n, p) = (x.nrows(), x.ncols());
    let x_mean: Vec<f64> = (0..p).map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let xc = DMatrix::from_fn(n, p, |i, j| x.get(i, j) - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += lambda;
    }
    let rhs = xc.transpose() * yc;

    let beta = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        // singular Gram matrix (lambda = 0 with collinear or constant columns)
        None => gram.svd(true, true).solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(p)),
    };
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ridge { intercept, coef }
}
