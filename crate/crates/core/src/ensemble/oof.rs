//! Out-of-fold prediction matrices.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::learners::{fit, LabeledDataset, LearnerSpec};
use crate::seed::{derive_seed, rng_from};

/// `values[i][m]` is model `m`'s probability for training row `i`, from a
/// fit that excluded row `i`'s fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofMatrix {
    pub model_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub folds: Vec<usize>,
    pub k_folds: usize,
}

impl OofMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn model_index(&self, id: &str) -> Option<usize> {
        self.model_ids.iter().position(|m| m == id)
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[m]).collect()
    }

    /// Keeps only the named columns, in the given order.
    pub fn restrict(&self, ids: &[String]) -> Result<OofMatrix> {
        let cols: Vec<usize> = ids
            .iter()
            .map(|id| self.model_index(id).ok_or_else(|| invalid(format!("no OOF column for {id}"))))
            .collect::<Result<_>>()?;
        Ok(OofMatrix {
            model_ids: ids.to_vec(),
            values: self.values.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect(),
            folds: self.folds.clone(),
            k_folds: self.k_folds,
        })
    }
}

/// Stratified fold ids: each class is shuffled with its own stream and dealt
/// round-robin, the second class continuing where the first stopped.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(invalid(format!("k_folds must be at least 2, got {k}")));
    }
    let mut folds = vec![0; labels.len()];
    let mut next = 0usize;
    for c in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng_from(derive_seed(seed, u64::from(c))));
        for i in idx {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

fn check_folds(labels: &[u8], folds: &[usize], k: usize) -> Result<()> {
    if folds.len() != labels.len() {
        return Err(invalid("fold assignment length differs from row count"));
    }
    if k > labels.len() {
        return Err(Error::FoldDegenerate(format!(
            "{k} folds for {} rows",
            labels.len()
        )));
    }
    for f in 0..k {
        let held = folds.iter().filter(|&&x| x == f).count();
        if held == 0 {
            return Err(Error::FoldDegenerate(format!("fold {f} is empty")));
        }
        let rest_pos = (0..labels.len()).filter(|&i| folds[i] != f && labels[i] == 1).count();
        let rest = labels.len() - held;
        if rest_pos == 0 || rest_pos == rest {
            return Err(Error::FoldDegenerate(format!(
                "training data outside fold {f} has only one class"
            )));
        }
    }
    if let Some(&bad) = folds.iter().find(|&&x| x >= k) {
        return Err(invalid(format!("fold id {bad} out of range for k = {k}")));
    }
    Ok(())
}

pub(crate) fn check_unique_names(pool: &[LearnerSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for s in pool {
        if !seen.insert(s.name()) {
            return Err(invalid(format!("model {} appears twice in the pool", s.name())));
        }
    }
    if pool.is_empty() {
        return Err(invalid("learner pool is empty"));
    }
    Ok(())
}

pub fn compute_oof(pool: &[LearnerSpec], train: &LabeledDataset, k: usize, seed: u64) -> Result<OofMatrix> {
    let folds = stratified_folds(&train.labels, k, seed)?;
    compute_oof_with_folds(pool, train, &folds, k)
}

/// Model `m` on fold `f` is fit with seed `derive_seed(spec.seed, f)`.
/// Jobs run in parallel and are assembled in (model, fold) order.
pub fn compute_oof_with_folds(
    pool: &[LearnerSpec],
    train: &LabeledDataset,
    folds: &[usize],
    k: usize,
) -> Result<OofMatrix> {
    check_unique_names(pool)?;
    check_folds(&train.labels, folds, k)?;
    let jobs: Vec<(usize, usize)> = (0..pool.len()).flat_map(|m| (0..k).map(move |f| (m, f))).collect();
    let results: Vec<Result<(usize, usize, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(m, f)| {
            let fit_idx: Vec<usize> = (0..train.n()).filter(|&i| folds[i] != f).collect();
            let held: Vec<usize> = (0..train.n()).filter(|&i| folds[i] == f).collect();
            let mut spec = pool[m].clone();
            spec.seed = derive_seed(pool[m].seed, f as u64);
            let model = fit(&spec, &train.subset(&fit_idx))?;
            let x: Vec<Vec<f64>> = held.iter().map(|&i| train.features[i].clone()).collect();
            Ok((m, f, model.predict_proba(&x)?))
        })
        .collect();
    let mut values = vec![vec![0.0; pool.len()]; train.n()];
    for r in results {
        let (m, f, p) = r?;
        for (&i, v) in (0..train.n()).filter(|&i| folds[i] == f).collect::<Vec<_>>().iter().zip(p) {
            values[i][m] = v;
        }
    }
    Ok(OofMatrix {
        model_ids: pool.iter().map(|s| s.name().to_string()).collect(),
        values,
        folds: folds.to_vec(),
        k_folds: k,
    })
}
