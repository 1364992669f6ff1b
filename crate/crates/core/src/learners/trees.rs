//! Histogram gradient-boosted regression trees.
//!
//! Features are pre-binned into at most `max_bins` buckets using thresholds
//! taken from the training data. Trees are grown depth-wise on gradient and
//! hessian histograms; leaves use the usual second-order value
//! `-G / (H + l2)` scaled by the learning rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{Error, Result};
use crate::model::Matrix;
use crate::stats::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// L2 regularisation on leaf values.
    pub l2: f64,
    /// Row fraction drawn (without replacement) for each tree.
    pub subsample: f64,
    pub max_bins: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 3, learning_rate: 0.1, min_leaf: 20, l2: 1.0, subsample: 1.0, max_bins: 256 }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidHyperparameter(m));
        if self.n_trees < 1 {
            return bad("n_trees must be >= 1".into());
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must lie in (0, 1], got {}", self.learning_rate));
        }
        if self.min_leaf < 1 {
            return bad("min_leaf must be >= 1".into());
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad(format!("l2 must be >= 0, got {}", self.l2));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad(format!("subsample must lie in (0, 1], got {}", self.subsample));
        }
        if !(2..=256).contains(&self.max_bins) {
            return bad(format!("max_bins must lie in [2, 256], got {}", self.max_bins));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Loss {
    Squared,
    Logistic,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    k = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Booster {
    base: f64,
    trees: Vec<Tree>,
    loss: Loss,
}

impl Predictor for Booster {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let raw = self.base + self.trees.iter().map(|t| t.predict(row)).sum::<f64>();
        match self.loss {
            Loss::Squared => raw,
            Loss::Logistic => sigmoid(raw),
        }
    }
}

/// Per-feature split thresholds; bin of `v` is the number of thresholds `< v`.
fn thresholds_for(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut unique = sorted.clone();
    unique.dedup();
    if unique.len() <= max_bins {
        return unique.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let n = sorted.len();
    let mut out: Vec<f64> = (1..max_bins).map(|k| sorted[k * n / max_bins - 1]).collect();
    out.dedup();
    // the largest value must stay in the last bin
    if out.last() == unique.last() {
        out.pop();
    }
    out
}

struct Binned {
    /// Column-major bin indices.
    bins: Vec<Vec<u8>>,
    thresholds: Vec<Vec<f64>>,
}

fn bin_features(x: &Matrix, max_bins: usize) -> Binned {
    let mut bins = Vec::with_capacity(x.ncols());
    let mut thresholds = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let t = thresholds_for(&col, max_bins);
        bins.push(col.iter().map(|v| t.partition_point(|th| th < v) as u8).collect());
        thresholds.push(t);
    }
    Binned { bins, thresholds }
}

struct Grower<'a> {
    data: &'a Binned,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a TreeParams,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
struct Bucket {
    g: f64,
    h: f64,
    n: usize,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    bin: usize,
}

impl Grower<'_> {
    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.l2) * self.params.learning_rate
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_value(g, h)));
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&rows, g, h) else {
            return id;
        };
        let col = &self.data.bins[best.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| (col[i] as usize) <= best.bin);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] =
            Node::Split { feature: best.feature, threshold: self.data.thresholds[best.feature][best.bin], left, right };
        id
    }

    fn best_split(&self, rows: &[usize], g: f64, h: f64) -> Option<BestSplit> {
        let l2 = self.params.l2;
        let parent = g * g / (h + l2);
        let min_leaf = self.params.min_leaf;
        let mut best: Option<BestSplit> = None;
        for (feature, col) in self.data.bins.iter().enumerate() {
            let n_thresholds = self.data.thresholds[feature].len();
            if n_thresholds == 0 {
                continue;
            }
            let mut hist = vec![Bucket { g: 0.0, h: 0.0, n: 0 }; n_thresholds + 1];
            for &i in rows {
                let b = &mut hist[col[i] as usize];
                b.g += self.grad[i];
                b.h += self.hess[i];
                b.n += 1;
            }
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for (bin, bucket) in hist.iter().take(n_thresholds).enumerate() {
                gl += bucket.g;
                hl += bucket.h;
                nl += bucket.n;
                let nr = rows.len() - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl <= 1e-12 || hr <= 1e-12 {
                    continue;
                }
                let gain = gl * gl / (hl + l2) + gr * gr / (hr + l2) - parent;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(BestSplit { gain, feature, bin });
                }
            }
        }
        best
    }
}

/// Row indices sorted by `(features, target)`.
fn canonical_order(x: &Matrix, y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| y[a].total_cmp(&y[b]))
    });
    order
}

pub(crate) fn fit(x: &Matrix, y: &[f64], params: &TreeParams, loss: Loss, seed: u64) -> Booster {
    let n = x.nrows();
    let data = bin_features(x, params.max_bins);
    let mean = y.iter().sum::<f64>() / n as f64;
    let base = match loss {
        Loss::Squared => mean,
        Loss::Logistic => {
            let r = mean.clamp(1e-6, 1.0 - 1e-6);
            (r / (1.0 - r)).ln()
        }
    };
    let mut raw = vec![base; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let canonical = (params.subsample < 1.0).then(|| canonical_order(x, y));

    for t in 0..params.n_trees {
        for i in 0..n {
            match loss {
                Loss::Squared => {
                    grad[i] = raw[i] - y[i];
                    hess[i] = 1.0;
                }
                Loss::Logistic => {
                    let p = sigmoid(raw[i]);
                    grad[i] = p - y[i];
                    hess[i] = p * (1.0 - p);
                }
            }
        }
        let rows: Vec<usize> = if let Some(order) = &canonical {
            // per-tree stream depends only on (seed, tree index); draws follow
            // the canonical row order so the sample is invariant to row shuffles
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut keep: Vec<usize> =
                order.iter().copied().filter(|_| rng.random::<f64>() < params.subsample).collect();
            keep.sort_unstable();
            keep
        } else {
            (0..n).collect()
        };
        if rows.is_empty() {
            continue;
        }
        let mut grower = Grower { data: &data, grad: &grad, hess: &hess, params, nodes: Vec::new() };
        grower.grow(rows, 0);
        let tree = Tree { nodes: grower.nodes };
        for (i, r) in raw.iter_mut().enumerate() {
            *r += tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    Booster { base, trees, loss }
}
