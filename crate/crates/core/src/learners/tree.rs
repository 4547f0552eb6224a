//! CART classification tree with Gini impurity.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum samples in each child of a split.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_leaf: 2,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        if self.min_leaf == 0 {
            return Err("min_leaf must be at least 1".into());
        }
        Ok(())
    }
}

/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        leaf_prob: f64,
    },
}

impl Node {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { leaf_prob } => return *leaf_prob,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Features used by any split.
    pub fn split_features(&self, out: &mut Vec<usize>) {
        if let Node::Split {
            feature,
            left,
            right,
            ..
        } = self
        {
            out.push(*feature);
            left.split_features(out);
            right.split_features(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

impl DecisionTree {
    /// A single-class training set yields a depth-0 tree.
    pub fn fit(params: &TreeParams, data: &LabeledDataset) -> Result<Self> {
        let idx: Vec<usize> = (0..data.n()).collect();
        let root = grow(data, idx, params, 0, &mut FeatureChoice::All);
        Ok(Self { root })
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.root.predict_row(r)).collect()
    }
}

/// Which features are searched at each split.
pub(crate) enum FeatureChoice<'a> {
    All,
    Random { k: usize, rng: &'a mut ChaCha8Rng },
}

impl FeatureChoice<'_> {
    fn pick(&mut self, d: usize) -> Vec<usize> {
        match self {
            FeatureChoice::All => (0..d).collect(),
            FeatureChoice::Random { k, rng } => {
                let k = (*k).min(d);
                let mut f = sample(&mut **rng, d, k).into_vec();
                f.sort_unstable();
                f
            }
        }
    }
}

/// Threshold strictly between `a < b`, never equal to `b`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

/// Sorts sample indices by one feature, ties by index.
pub(crate) fn sort_by_feature(x: &[Vec<f64>], idx: &mut [usize], f: usize) {
    idx.sort_by(|&a, &b| {
        x[a][f]
            .partial_cmp(&x[b][f])
            .expect("finite features")
            .then(a.cmp(&b))
    });
}

fn weighted_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    2.0 * (pos as f64) * ((n - pos) as f64) / n as f64
}

pub(crate) fn grow(
    data: &LabeledDataset,
    idx: Vec<usize>,
    params: &TreeParams,
    depth: usize,
    choice: &mut FeatureChoice<'_>,
) -> Node {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| data.labels[i] == 1).count();
    let leaf = Node::Leaf {
        leaf_prob: pos as f64 / n as f64,
    };
    if pos == 0 || pos == n || depth >= params.max_depth || n < 2 * params.min_leaf {
        return leaf;
    }
    let x = &data.features;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = idx.clone();
    for f in choice.pick(data.dim()) {
        sort_by_feature(x, &mut sorted, f);
        let mut pos_left = 0usize;
        for s in 0..n - 1 {
            if data.labels[sorted[s]] == 1 {
                pos_left += 1;
            }
            let n_left = s + 1;
            let (a, b) = (x[sorted[s]][f], x[sorted[s + 1]][f]);
            if a == b || n_left < params.min_leaf || n - n_left < params.min_leaf {
                continue;
            }
            let imp = weighted_gini(pos_left, n_left) + weighted_gini(pos - pos_left, n - n_left);
            if best.is_none_or(|(bi, _, _)| imp < bi) {
                best = Some((imp, f, midpoint(a, b)));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[i][feature] <= threshold);
    Node::Split {
        feature,
        threshold,
        left: Box::new(grow(data, l, params, depth + 1, choice)),
        right: Box::new(grow(data, r, params, depth + 1, choice)),
    }
}
