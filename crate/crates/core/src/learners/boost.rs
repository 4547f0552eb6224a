//! Second-order gradient boosting on the logistic loss.
//!
//! Each round fits a regression tree to per-sample gradients and hessians;
//! no column subsampling.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, sort_by_feature};
use super::{sigmoid, softplus, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub l2_lambda: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            l2_lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<RegNode>,
        right: Box<RegNode>,
    },
    Leaf {
        leaf_value: f64,
    },
}

impl RegNode {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                RegNode::Leaf { leaf_value } => return *leaf_value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Booster {
    /// Log-odds of the training prior.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegNode>,
    /// Mean training logistic loss before round 1 and after every round.
    pub loss_history: Vec<f64>,
}

fn mean_logloss(f: &[f64], y: &[u8]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&z, &t)| softplus(z) - f64::from(t) * z)
        .sum::<f64>()
        / f.len() as f64
}

struct GradStats<'a> {
    x: &'a [Vec<f64>],
    g: &'a [f64],
    h: &'a [f64],
    lambda: f64,
}

impl GradStats<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.lambda)
    }

    fn grow(&self, idx: Vec<usize>, depth: usize, max_depth: usize) -> RegNode {
        let gs: f64 = idx.iter().map(|&i| self.g[i]).sum();
        let hs: f64 = idx.iter().map(|&i| self.h[i]).sum();
        let leaf = RegNode::Leaf {
            leaf_value: -gs / (hs + self.lambda),
        };
        if depth >= max_depth || idx.len() < 2 {
            return leaf;
        }
        let parent = self.score(gs, hs);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.clone();
        for f in 0..self.x[0].len() {
            sort_by_feature(self.x, &mut sorted, f);
            let (mut gl, mut hl) = (0.0, 0.0);
            for s in 0..sorted.len() - 1 {
                gl += self.g[sorted[s]];
                hl += self.h[sorted[s]];
                let (a, b) = (self.x[sorted[s]][f], self.x[sorted[s + 1]][f]);
                if a == b {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gs - gl, hs - hl) - parent;
                if gain > 0.0 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, midpoint(a, b)));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return leaf;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        RegNode::Split {
            feature,
            threshold,
            left: Box::new(self.grow(l, depth + 1, max_depth)),
            right: Box::new(self.grow(r, depth + 1, max_depth)),
        }
    }
}

impl Booster {
    pub fn fit(params: &BoostParams, data: &LabeledDataset) -> Result<Self> {
        let n = data.n();
        let pos = data.n_positive();
        if pos == 0 || pos == n {
            return Err(Error::DegeneratePrior);
        }
        let prior = pos as f64 / n as f64;
        let base_score = (prior / (1.0 - prior)).ln();
        let mut f = vec![base_score; n];
        let mut loss_history = vec![mean_logloss(&f, &data.labels)];
        let mut trees = Vec::with_capacity(params.n_rounds);
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        for _ in 0..params.n_rounds {
            for i in 0..n {
                let p = sigmoid(f[i]);
                g[i] = p - f64::from(data.labels[i]);
                h[i] = p * (1.0 - p);
            }
            let stats = GradStats {
                x: &data.features,
                g: &g,
                h: &h,
                lambda: params.l2_lambda,
            };
            let tree = stats.grow((0..n).collect(), 0, params.max_depth);
            for (fi, x) in f.iter_mut().zip(&data.features) {
                *fi += params.learning_rate * tree.predict_row(x);
            }
            loss_history.push(mean_logloss(&f, &data.labels));
            trees.push(tree);
        }
        Ok(Self {
            base_score,
            learning_rate: params.learning_rate,
            trees,
            loss_history,
        })
    }

    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| sigmoid(self.raw_score(r))).collect()
    }
}
