//! Confusion counts, threshold metrics and permutation importance.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::auc_score;
use crate::error::{invalid, Error, Result};
use crate::seed::{derive_seed2, rng_from};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Positive = infected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `p >= threshold` counts as a positive call.
pub fn confusion(preds: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionMatrix> {
    if preds.is_empty() {
        return Err(invalid("no predictions to tally"));
    }
    if preds.len() != labels.len() {
        return Err(invalid(format!("{} predictions for {} labels", preds.len(), labels.len())));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!("threshold {threshold} not in (0, 1)")));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in preds.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Ratios with a zero denominator are `None` and named in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub recall_infected: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix, auc: Option<f64>, threshold: f64) -> MetricsReport {
    let accuracy = ratio(cm.tp + cm.tn, cm.total());
    let recall_infected = ratio(cm.tp, cm.tp + cm.fn_);
    let specificity = ratio(cm.tn, cm.tn + cm.fp);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
    let mut undefined = Vec::new();
    for (name, v) in [
        ("accuracy", accuracy),
        ("recall_infected", recall_infected),
        ("specificity", specificity),
        ("precision", precision),
        ("f1", f1),
        ("auc", auc),
    ] {
        if v.is_none() {
            undefined.push(name.to_string());
        }
    }
    MetricsReport {
        confusion: *cm,
        accuracy,
        recall_infected,
        specificity,
        precision,
        f1,
        auc,
        threshold,
        undefined,
    }
}

/// Confusion counts plus AUC (undefined when one class is absent).
pub fn evaluate(preds: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    let cm = confusion(preds, labels, threshold)?;
    let auc = match auc_score(preds, labels) {
        Ok(a) => Some(a),
        Err(Error::SingleClass(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(metrics(&cm, auc, threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub representative_nm: f64,
    pub importance_mean: f64,
    pub importance_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceProfile {
    pub baseline_auc: f64,
    pub n_repeats: usize,
    pub aggregation: String,
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceProfile {
    /// Entry indices by decreasing mean importance, ties by wavelength.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by(|&a, &b| {
            self.entries[b]
                .importance_mean
                .total_cmp(&self.entries[a].importance_mean)
                .then(a.cmp(&b))
        });
        idx
    }
}

/// AUC drop when one feature column is shuffled.
///
/// Column `c`, repeat `r` is shuffled with seed `derive_seed2(seed, c, r)`;
/// the SD is the sample SD over repeats (0 for a single repeat).
pub fn permutation_importance<F>(
    predict: F,
    features: &[Vec<f64>],
    labels: &[u8],
    wavelengths_nm: &[f64],
    n_repeats: usize,
    seed: u64,
) -> Result<ImportanceProfile>
where
    F: Fn(&[Vec<f64>]) -> Result<Vec<f64>> + Sync,
{
    if n_repeats == 0 {
        return Err(invalid("n_repeats must be at least 1"));
    }
    let d = features.first().map_or(0, Vec::len);
    if wavelengths_nm.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: wavelengths_nm.len(),
        });
    }
    let baseline_auc = auc_score(&predict(features)?, labels)?;
    let jobs: Vec<(usize, usize)> = (0..d).flat_map(|c| (0..n_repeats).map(move |r| (c, r))).collect();
    let drops: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let mut col: Vec<f64> = features.iter().map(|row| row[c]).collect();
            col.shuffle(&mut rng_from(derive_seed2(seed, c as u64, r as u64)));
            let permuted: Vec<Vec<f64>> = features
                .iter()
                .zip(&col)
                .map(|(row, &v)| {
                    let mut row = row.clone();
                    row[c] = v;
                    row
                })
                .collect();
            Ok(baseline_auc - auc_score(&predict(&permuted)?, labels)?)
        })
        .collect::<Result<_>>()?;
    let entries = (0..d)
        .map(|c| {
            let x = &drops[c * n_repeats..(c + 1) * n_repeats];
            let mean = x.iter().sum::<f64>() / n_repeats as f64;
            let sd = if n_repeats > 1 {
                (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_repeats - 1) as f64).sqrt()
            } else {
                0.0
            };
            ImportanceEntry {
                representative_nm: wavelengths_nm[c],
                importance_mean: mean,
                importance_sd: sd,
            }
        })
        .collect();
    Ok(ImportanceProfile {
        baseline_auc,
        n_repeats,
        aggregation: "stacked_ensemble".into(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{fit, DecisionTree, Hyperparams, LabeledDataset, LearnerSpec, LogregParams, TreeParams};
    use crate::seed::rng_from;
    use rand::Rng;

    #[test]
    fn hand_tally() {
        let cm = confusion(&[0.9, 0.4, 0.2, 0.6], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.tn, cm.fp), (1, 1, 1, 1));
        let m = metrics(&cm, None, 0.5);
        assert_eq!(m.accuracy, Some(0.5));
        assert_eq!(m.recall_infected, Some(0.5));
        assert_eq!(m.specificity, Some(0.5));
        assert_eq!(m.undefined, vec!["auc"]);
    }

    #[test]
    fn boundary_counts_positive() {
        let cm = confusion(&[0.5], &[0], 0.5).unwrap();
        assert_eq!(cm.fp, 1);
    }

    #[test]
    fn perfect_predictions() {
        let cm = confusion(&[0.9, 0.1, 0.7], &[1, 0, 1], 0.5).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
    }

    #[test]
    fn zero_denominators_are_null_not_nan() {
        let m = evaluate(&[0.1, 0.2], &[0, 0], 0.5).unwrap();
        assert_eq!(m.recall_infected, None);
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.auc, None);
        assert_eq!(m.specificity, Some(1.0));
        let v = serde_json::to_value(&m).unwrap();
        assert!(v["precision"].is_null());
        assert_eq!(v["confusion"]["fn"], 0);
    }

    #[test]
    fn empty_and_bad_threshold_are_errors() {
        assert!(confusion(&[], &[], 0.5).is_err());
        assert!(confusion(&[0.3], &[1], 1.0).is_err());
    }

    #[test]
    fn accuracy_is_prevalence_weighted_recalls() {
        let mut rng = rng_from(8);
        for _ in 0..50 {
            let n = rng.random_range(2..80);
            let p: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let m = evaluate(&p, &y, 0.5).unwrap();
            let cm = confusion(&p, &y, 0.5).unwrap();
            assert_eq!(metrics(&cm, m.auc, 0.5), m);
            if let (Some(r), Some(s)) = (m.recall_infected, m.specificity) {
                let prev = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
                assert!((m.accuracy.unwrap() - (prev * r + (1.0 - prev) * s)).abs() < 1e-12);
            }
        }
    }

    fn informative(n: usize, seed: u64) -> LabeledDataset {
        let mut rng = rng_from(seed);
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = y
            .iter()
            .map(|&l| vec![f64::from(l) * 1.5 + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        LabeledDataset::new(x, y).unwrap()
    }

    #[test]
    fn unused_feature_has_zero_importance() {
        let d = informative(60, 1);
        let t = DecisionTree::fit(&TreeParams { max_depth: 1, min_leaf: 2 }, &d).unwrap();
        let mut used = Vec::new();
        t.root.split_features(&mut used);
        assert_eq!(used, vec![0]);
        let ev = informative(40, 2);
        let prof = permutation_importance(|x| Ok(t.predict(x)), &ev.features, &ev.labels, &[1450.0, 700.0], 10, 3).unwrap();
        assert_eq!(prof.entries[1].importance_mean, 0.0);
        assert_eq!(prof.entries[1].importance_sd, 0.0);
        assert!(prof.entries[0].importance_mean > 0.1);
        assert_eq!(prof.ranking()[0], 0);
    }

    #[test]
    fn noise_feature_importance_is_small() {
        let d = informative(80, 4);
        let spec = LearnerSpec::new(Hyperparams::Logreg(LogregParams::default()), 0);
        let m = fit(&spec, &d).unwrap();
        let ev = informative(200, 5);
        let prof = permutation_importance(|x| m.predict_proba(x), &ev.features, &ev.labels, &[1.0, 2.0], 20, 9).unwrap();
        let e = &prof.entries[1];
        let se = e.importance_sd / (20f64).sqrt();
        assert!(e.importance_mean.abs() < 2.0 * e.importance_sd.max(1e-12) || e.importance_mean.abs() < 3.0 * se + 0.01);
    }

    #[test]
    fn duplicated_feature_splits_importance() {
        let d = informative(120, 6);
        let spec = LearnerSpec::new(Hyperparams::Logreg(LogregParams::default()), 0);
        let single = fit(&spec, &d).unwrap();
        let dup = LabeledDataset::new(
            d.features.iter().map(|r| vec![r[0], r[1], r[0]]).collect(),
            d.labels.clone(),
        )
        .unwrap();
        let double = fit(&spec, &dup).unwrap();
        let ev = informative(200, 7);
        let ev_dup: Vec<Vec<f64>> = ev.features.iter().map(|r| vec![r[0], r[1], r[0]]).collect();
        let a = permutation_importance(|x| single.predict_proba(x), &ev.features, &ev.labels, &[1.0, 2.0], 10, 1).unwrap();
        let b = permutation_importance(|x| double.predict_proba(x), &ev_dup, &ev.labels, &[1.0, 2.0, 3.0], 10, 1).unwrap();
        let orig = a.entries[0].importance_mean;
        assert!(b.entries[0].importance_mean <= orig && b.entries[2].importance_mean <= orig);
    }

    #[test]
    fn repeats_are_seeded() {
        let d = informative(40, 1);
        let t = DecisionTree::fit(&TreeParams::default(), &d).unwrap();
        let run = |s| permutation_importance(|x| Ok(t.predict(x)), &d.features, &d.labels, &[1.0, 2.0], 5, s).unwrap();
        assert_eq!(run(3), run(3));
    }
}
