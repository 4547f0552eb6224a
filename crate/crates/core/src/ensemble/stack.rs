//! Logistic-regression stacking over base-model probabilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oof::{check_unique_names, compute_oof, OofMatrix};
use crate::error::{invalid, Result};
use crate::learners::{fit, BaseModel, LabeledDataset, LearnerSpec, LogisticRegression, LogregParams};

/// `p = sigmoid(intercept + Σ weights[m] · p_m)` over `model_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub model_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
}

impl MetaModel {
    fn as_logreg(&self) -> LogisticRegression {
        LogisticRegression {
            weights: self.weights.clone(),
            intercept: self.intercept,
            converged: self.converged,
            iterations: 0,
            grad_norm: 0.0,
        }
    }

    pub fn predict(&self, base_probs: &[Vec<f64>]) -> Vec<f64> {
        self.as_logreg().predict(base_probs)
    }
}

/// Base models refit on the full training set plus the meta combiner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub base_models: Vec<BaseModel>,
    pub meta: MetaModel,
}

impl StackedModel {
    /// Rows of per-model probabilities, columns in `meta.model_ids` order.
    pub fn base_probabilities(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let cols: Vec<Vec<f64>> = self
            .base_models
            .iter()
            .map(|m| m.predict_proba(features))
            .collect::<Result<_>>()?;
        Ok((0..features.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
    }

    pub fn predict_features(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.meta.predict(&self.base_probabilities(features)?))
    }
}

/// Fits the meta model on the OOF columns of `selected` and refits each
/// selected base model on all of `train`.
pub fn fit_stacked_from_oof(selected: &[LearnerSpec], train: &LabeledDataset, oof: &OofMatrix) -> Result<StackedModel> {
    check_unique_names(selected)?;
    if oof.n_rows() != train.n() {
        return Err(invalid(format!(
            "OOF matrix has {} rows for {} training rows",
            oof.n_rows(),
            train.n()
        )));
    }
    let ids: Vec<String> = selected.iter().map(|s| s.name().to_string()).collect();
    let cols = oof.restrict(&ids)?;
    let meta_data = LabeledDataset::new(cols.values, train.labels.clone())?;
    let meta = LogisticRegression::fit(&LogregParams::default(), &meta_data)?;
    let base_models: Vec<BaseModel> = selected
        .par_iter()
        .map(|s| fit(s, train))
        .collect::<Result<_>>()?;
    Ok(StackedModel {
        base_models,
        meta: MetaModel {
            model_ids: ids,
            weights: meta.weights,
            intercept: meta.intercept,
            converged: meta.converged,
        },
    })
}

pub fn fit_stacked(selected: &[LearnerSpec], train: &LabeledDataset, k_folds: usize, seed: u64) -> Result<StackedModel> {
    let oof = compute_oof(selected, train, k_folds, seed)?;
    fit_stacked_from_oof(selected, train, &oof)
}
