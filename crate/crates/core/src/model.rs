//! Shared domain vocabulary: datasets, estimands and result records.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::LengthMismatch(format!("row {i} has {} columns, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().position(|c| c.len() != rows) {
            return Err(Error::LengthMismatch(format!("column {c} has a different length")));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Matrix { rows: self.rows, cols: idx.len(), data }
    }

    pub fn with_column(&self, col: &[f64]) -> Result<Matrix> {
        if col.len() != self.rows {
            return Err(Error::LengthMismatch("appended column length differs from row count".into()));
        }
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for (i, v) in col.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(*v);
        }
        Ok(Matrix { rows: self.rows, cols, data })
    }
}

/// Observed data (Y, D, X) with validated invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    d: Vec<u8>,
    x: Matrix,
    covariate_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, rejecting non-binary treatments, empty arms,
    /// non-finite values and duplicate covariate names.
    pub fn new(y: Vec<f64>, d: Vec<f64>, x: Matrix, covariate_names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if d.len() != n || x.nrows() != n {
            return Err(Error::LengthMismatch(format!("y has {n} rows, d has {}, x has {}", d.len(), x.nrows())));
        }
        if covariate_names.len() != x.ncols() {
            return Err(Error::LengthMismatch(format!(
                "{} covariate names for {} columns",
                covariate_names.len(),
                x.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::EmptyArm { arm: "treated" });
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { column: "outcome".into(), row });
        }
        if let Some(row) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { column: "treatment".into(), row });
        }
        for (k, v) in x.as_slice().iter().enumerate() {
            if !v.is_finite() {
                let col = &covariate_names[k % x.ncols()];
                return Err(Error::NonFiniteValue { column: col.clone(), row: k / x.ncols() });
            }
        }
        let mut seen = HashSet::new();
        for name in &covariate_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        let mut dd = Vec::with_capacity(n);
        for (row, &v) in d.iter().enumerate() {
            dd.push(if v == 0.0 {
                0u8
            } else if v == 1.0 {
                1u8
            } else {
                return Err(Error::NonBinaryTreatment { row, value: v });
            });
        }
        let n_treated = dd.iter().filter(|&&v| v == 1).count();
        if n_treated == 0 {
            return Err(Error::EmptyArm { arm: "treated" });
        }
        if n_treated == n {
            return Err(Error::EmptyArm { arm: "control" });
        }
        Ok(Self { y, d: dd, x, covariate_names })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> &[u8] {
        &self.d
    }

    #[inline]
    pub fn treated(&self, i: usize) -> bool {
        self.d[i] == 1
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_treated(&self) -> usize {
        self.d.iter().filter(|&&v| v == 1).count()
    }

    pub fn treated_share(&self) -> f64 {
        self.n_treated() as f64 / self.n() as f64
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.covariate_names.iter().position(|c| c == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Same observations with the named covariates removed.
    pub fn drop_covariates(&self, names: &[String]) -> Result<Dataset> {
        let mut drop = HashSet::new();
        for name in names {
            drop.insert(self.column_index(name)?);
        }
        let keep: Vec<usize> = (0..self.x.ncols()).filter(|j| !drop.contains(j)).collect();
        if keep.is_empty() {
            return Err(Error::DegenerateShortModel);
        }
        Ok(Dataset {
            y: self.y.clone(),
            d: self.d.clone(),
            x: self.x.select_columns(&keep),
            covariate_names: keep.iter().map(|&j| self.covariate_names[j].clone()).collect(),
        })
    }

    /// Same observations with one extra covariate appended.
    pub fn with_covariate(&self, name: &str, values: &[f64]) -> Result<Dataset> {
        let d = self.d.iter().map(|&v| f64::from(v)).collect();
        let mut names = self.covariate_names.clone();
        names.push(name.to_string());
        Dataset::new(self.y.clone(), d, self.x.with_column(values)?, names)
    }
}

/// Named raw columns as read from a table, before validation.
#[derive(Debug, Clone, Default)]
pub struct RawTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl RawTable {
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }
}

/// Picks outcome, treatment and covariates out of a raw table. When
/// `covariates` is `None` every other column is used, in table order.
pub fn validate_dataset(
    table: &RawTable,
    outcome: &str,
    treatment: &str,
    covariates: Option<&[String]>,
) -> Result<Dataset> {
    let y = table.column(outcome)?.to_vec();
    let d = table.column(treatment)?.to_vec();
    let names: Vec<String> = match covariates {
        Some(c) => c.to_vec(),
        None => table.names.iter().filter(|n| n.as_str() != outcome && n.as_str() != treatment).cloned().collect(),
    };
    let mut cols = Vec::with_capacity(names.len());
    for name in &names {
        cols.push(table.column(name)?.to_vec());
    }
    let x = if cols.is_empty() { Matrix::zeros(y.len(), 0) } else { Matrix::from_columns(&cols)? };
    Dataset::new(y, d, x, names)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimandKind {
    #[serde(rename = "ATT")]
    Att,
    #[serde(rename = "ATE")]
    Ate,
}

impl std::fmt::Display for EstimandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimandKind::Att => "ATT",
            EstimandKind::Ate => "ATE",
        })
    }
}

/// Target parameter together with the null hypothesis and confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimand {
    pub kind: EstimandKind,
    pub h0: f64,
    pub level: f64,
}

impl Estimand {
    pub fn new(kind: EstimandKind, h0: f64, level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
        }
        if !h0.is_finite() {
            return Err(Error::Domain("h0 must be finite".into()));
        }
        Ok(Self { kind, h0, level })
    }

    pub fn att() -> Self {
        Self { kind: EstimandKind::Att, h0: 0.0, level: 0.95 }
    }

    pub fn ate() -> Self {
        Self { kind: EstimandKind::Ate, h0: 0.0, level: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub se: f64,
    /// Orthogonal score evaluated at `theta_hat`, one entry per observation.
    pub psi: Vec<f64>,
    /// Mean derivative of the score in theta.
    pub jacobian: f64,
    pub p_hat: f64,
    pub level: f64,
    pub ci: (f64, f64),
}

impl EstimateResult {
    pub fn n(&self) -> usize {
        self.psi.len()
    }

    /// Influence-function values of theta_hat (score scaled by the inverse slope).
    pub fn influence(&self) -> Vec<f64> {
        let scale = -1.0 / self.jacobian;
        self.psi.iter().map(|p| p * scale).collect()
    }
}

/// Scale estimates feeding the bias bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInput {
    pub sigma2: f64,
    pub nu2: f64,
    pub psi_sigma2: Vec<f64>,
    pub psi_nu2: Vec<f64>,
}

/// Confounding scenario: outcome partial R², treatment partial R² and the
/// correlation of the two confounding errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityParams {
    pub cf_y: f64,
    pub cf_d: f64,
    pub rho: f64,
}

impl SensitivityParams {
    pub fn new(cf_y: f64, cf_d: f64, rho: f64) -> Result<Self> {
        let p = Self { cf_y, cf_d, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cf_y) {
            return Err(Error::Domain(format!("cf_y must lie in [0, 1], got {}", self.cf_y)));
        }
        if !(0.0..1.0).contains(&self.cf_d) {
            return Err(Error::Domain(format!("cf_d must lie in [0, 1), got {}", self.cf_d)));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::Domain(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }
}

impl Default for SensitivityParams {
    fn default() -> Self {
        Self { cf_y: 0.03, cf_d: 0.03, rho: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub params: SensitivityParams,
    pub theta_hat: f64,
    pub bias: f64,
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub se_lower: f64,
    pub se_upper: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub h0: f64,
    pub level: f64,
    /// `None` when no finite robustness value exists.
    pub rv: Option<f64>,
    pub rva: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapSummary {
    pub min: f64,
    pub max: f64,
    pub share_outside: f64,
    pub eps: f64,
}

/// Range of the propensity scores and the share lying outside `[eps, 1 - eps]`.
pub fn overlap_diagnostics(m_hat: &[f64], eps: f64) -> OverlapSummary {
    let min = m_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let max = m_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let outside = m_hat.iter().filter(|&&m| m < eps || m > 1.0 - eps).count();
    let share_outside = if m_hat.is_empty() { 0.0 } else { outside as f64 / m_hat.len() as f64 };
    OverlapSummary { min, max, share_outside, eps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn minimal_valid_dataset() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let ds = Dataset::new(vec![1.0, 2.0], vec![1.0, 0.0], x, names(1)).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.n_treated(), 1);
    }

    #[test]
    fn all_treated_is_empty_arm() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let err = Dataset::new(vec![1.0, 2.0], vec![1.0, 1.0], x, names(1)).unwrap_err();
        assert_eq!(err, Error::EmptyArm { arm: "control" });
    }

    #[test]
    fn nan_outcome_rejected() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let err = Dataset::new(vec![f64::NAN, 2.0], vec![1.0, 0.0], x, names(1)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 0, .. }));
    }

    #[test]
    fn non_binary_and_duplicates_rejected() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let err = Dataset::new(vec![1.0, 2.0], vec![1.0, 2.0], x.clone(), names(2)).unwrap_err();
        assert!(matches!(err, Error::NonBinaryTreatment { row: 1, .. }));
        let err = Dataset::new(vec![1.0, 2.0], vec![1.0, 0.0], x, vec!["a".into(), "a".into()]).unwrap_err();
        assert_eq!(err, Error::DuplicateName("a".into()));
    }

    #[test]
    fn validate_from_table_uses_remaining_columns() {
        let table = RawTable {
            names: vec!["y".into(), "x1".into(), "d".into(), "x2".into()],
            columns: vec![vec![1.0, 2.0], vec![0.1, 0.2], vec![0.0, 1.0], vec![5.0, 6.0]],
        };
        let ds = validate_dataset(&table, "y", "d", None).unwrap();
        assert_eq!(ds.covariate_names(), &["x1".to_string(), "x2".to_string()]);
        assert_eq!(ds.x().row(1), &[0.2, 6.0]);
        assert_eq!(validate_dataset(&table, "y", "treat", None).unwrap_err(), Error::UnknownVariable("treat".into()));
    }

    #[test]
    fn drop_covariates_keeps_order_and_rejects_empty() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let ds = Dataset::new(vec![0.0, 1.0], vec![0.0, 1.0], x, names(3)).unwrap();
        let short = ds.drop_covariates(&["x1".into()]).unwrap();
        assert_eq!(short.x().row(1), &[4.0, 6.0]);
        assert_eq!(ds.drop_covariates(&names(3)).unwrap_err(), Error::DegenerateShortModel);
        assert_eq!(ds.drop_covariates(&["z".into()]).unwrap_err(), Error::UnknownVariable("z".into()));
    }

    #[test]
    fn overlap_examples() {
        let s = overlap_diagnostics(&[0.5, 0.5], 0.01);
        assert_eq!((s.min, s.max, s.share_outside), (0.5, 0.5, 0.0));
        assert_eq!(overlap_diagnostics(&[0.001, 0.5], 0.01).share_outside, 0.5);
        let s = overlap_diagnostics(&[0.99, 0.01], 0.02);
        assert_eq!((s.min, s.max, s.share_outside), (0.01, 0.99, 1.0));
    }

    #[test]
    fn estimand_level_bounds() {
        assert!(Estimand::new(EstimandKind::Att, 0.0, 1.0).is_err());
        assert!(Estimand::new(EstimandKind::Att, 0.0, 0.0).is_err());
        assert_eq!(Estimand::new(EstimandKind::Att, 0.0, 0.95).unwrap(), Estimand::att());
    }

    #[test]
    fn sensitivity_params_ranges() {
        assert!(SensitivityParams::new(0.1, 1.0, 1.0).is_err());
        assert!(SensitivityParams::new(1.0, 0.999, -1.0).is_ok());
        assert!(SensitivityParams::new(1.1, 0.0, 0.0).is_err());
    }

    #[derive(Debug, Clone)]
    enum Corruption {
        NanY(usize),
        InfX(usize, usize),
        NonBinaryD(usize, f64),
        AllOneArm(bool),
        DuplicateName,
    }

    fn corruption(n: usize, p: usize) -> impl Strategy<Value = Corruption> {
        prop_oneof![
            (0..n).prop_map(Corruption::NanY),
            (0..n, 0..p).prop_map(|(i, j)| Corruption::InfX(i, j)),
            (0..n, prop_oneof![Just(2.0), Just(-1.0), Just(0.5)]).prop_map(|(i, v)| Corruption::NonBinaryD(i, v)),
            any::<bool>().prop_map(Corruption::AllOneArm),
            Just(Corruption::DuplicateName),
        ]
    }

    proptest! {
        #[test]
        fn construction_rejects_each_single_corruption(
            seed_vals in proptest::collection::vec(-5.0f64..5.0, 24),
            c in corruption(6, 3),
        ) {
            let n = 6;
            let p = 3;
            let mut y: Vec<f64> = seed_vals[..n].to_vec();
            let mut d: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
            let mut xs: Vec<f64> = seed_vals[n..n + n * p].to_vec();
            let mut nm = names(p);
            // the untouched data is valid
            prop_assert!(Dataset::new(y.clone(), d.clone(), Matrix::new(n, p, xs.clone()).unwrap(), nm.clone()).is_ok());
            match c {
                Corruption::NanY(i) => y[i] = f64::NAN,
                Corruption::InfX(i, j) => xs[i * p + j] = f64::INFINITY,
                Corruption::NonBinaryD(i, v) => d[i] = v,
                Corruption::AllOneArm(t) => d.iter_mut().for_each(|v| *v = if t { 1.0 } else { 0.0 }),
                Corruption::DuplicateName => nm[2] = nm[0].clone(),
            }
            let res = Dataset::new(y, d, Matrix::new(n, p, xs).unwrap(), nm);
            prop_assert!(res.is_err());
        }
    }
}
