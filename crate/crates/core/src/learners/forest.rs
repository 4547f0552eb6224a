//! Random forest: bagged Gini trees with per-split feature subsampling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, FeatureChoice, Node, TreeParams};
use super::LabeledDataset;
use crate::error::Result;
use crate::seed::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// ⌈√d⌉
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Node>,
}

impl Forest {
    /// Tree `t` draws its bootstrap sample and feature subsets from
    /// `derive_seed(seed, t)`.
    pub fn fit(params: &ForestParams, data: &LabeledDataset, seed: u64) -> Result<Self> {
        let n = data.n();
        let k = params.max_features.resolve(data.dim());
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from(derive_seed(seed, t as u64));
                let mut idx: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                idx.sort_unstable();
                let mut choice = if k >= data.dim() {
                    FeatureChoice::All
                } else {
                    FeatureChoice::Random { k, rng: &mut rng }
                };
                grow(data, idx, &params.tree, 0, &mut choice)
            })
            .collect();
        Ok(Self { trees })
    }

    /// Mean of the trees' leaf probabilities.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|r| {
                self.trees.iter().map(|t| t.predict_row(r)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }
}
