//! AUC, prediction correlation and greedy diverse-model selection.

use serde::{Deserialize, Serialize};

use super::oof::OofMatrix;
use crate::error::{invalid, Error, Result};
use crate::spectral::pearson_r;

/// Mann-Whitney AUC: `(wins + ½ ties) / (n_pos · n_neg)`.
///
/// Counted exactly in integers, so it equals pairwise enumeration.
pub fn auc_score(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(invalid(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(invalid("NaN score"));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut twice_wins, mut neg_below) = (0u128, 0u128);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_wins += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(twice_wins as f64 / (2 * n_pos * n_neg) as f64)
}

/// Symmetric Pearson matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub model_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Pairs involving a constant column; their entry is 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_pairs: Vec<(String, String)>,
}

pub fn prediction_correlation(oof: &OofMatrix) -> Result<CorrelationMatrix> {
    let m = oof.model_ids.len();
    let cols: Vec<Vec<f64>> = (0..m).map(|c| oof.column(c)).collect();
    let mut values = vec![vec![0.0; m]; m];
    let mut degenerate_pairs = Vec::new();
    for a in 0..m {
        values[a][a] = 1.0;
        for b in a + 1..m {
            let c = pearson_r(&cols[a], &cols[b])?;
            if c.degenerate {
                degenerate_pairs.push((oof.model_ids[a].clone(), oof.model_ids[b].clone()));
            }
            values[a][b] = c.r;
            values[b][a] = c.r;
        }
    }
    Ok(CorrelationMatrix {
        model_ids: oof.model_ids.clone(),
        values,
        degenerate_pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub max_models: usize,
    pub corr_ceiling: f64,
    pub auc_floor: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            max_models: 4,
            corr_ceiling: 0.95,
            auc_floor: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub model: String,
    pub auc: f64,
    pub decision: Decision,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub model_ids: Vec<String>,
    /// Mean AUC per model, aligned with `model_ids`.
    pub auc: Vec<f64>,
    pub correlation: CorrelationMatrix,
    /// Acceptance order.
    pub selected: Vec<String>,
    /// One entry per model in consideration order.
    pub trace: Vec<TraceEntry>,
    pub config: SelectionConfig,
}

/// Greedy pass in order of decreasing AUC (ties by name): a model is kept
/// if its AUC exceeds the floor and its |r| with every kept model is at most
/// the ceiling, until `max_models` are kept.
pub fn select_models(auc: &[f64], corr: &CorrelationMatrix, cfg: &SelectionConfig) -> Result<SelectionReport> {
    let ids = &corr.model_ids;
    if ids.is_empty() {
        return Err(invalid("empty model pool"));
    }
    if auc.len() != ids.len() || corr.values.len() != ids.len() {
        return Err(invalid("AUC list and correlation matrix disagree on pool size"));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| auc[b].total_cmp(&auc[a]).then_with(|| ids[a].cmp(&ids[b])));
    let mut kept: Vec<usize> = Vec::new();
    let mut trace = Vec::with_capacity(ids.len());
    for &m in &order {
        let reject = |reason: String| TraceEntry {
            model: ids[m].clone(),
            auc: auc[m],
            decision: Decision::Rejected,
            reason,
        };
        if kept.len() >= cfg.max_models {
            trace.push(reject(format!("max_models ({}) reached", cfg.max_models)));
            continue;
        }
        if !(auc[m] > cfg.auc_floor) {
            trace.push(reject(format!("auc {:.4} not above floor {}", auc[m], cfg.auc_floor)));
            continue;
        }
        if let Some(&k) = kept.iter().find(|&&k| corr.values[m][k].abs() > cfg.corr_ceiling) {
            trace.push(reject(format!(
                "correlation ceiling: |r| = {:.4} with {} exceeds {}",
                corr.values[m][k].abs(),
                ids[k],
                cfg.corr_ceiling
            )));
            continue;
        }
        kept.push(m);
        trace.push(TraceEntry {
            model: ids[m].clone(),
            auc: auc[m],
            decision: Decision::Accepted,
            reason: "accepted".into(),
        });
    }
    if kept.is_empty() {
        return Err(Error::NoModelSelected(format!(
            "best AUC {:.4} with floor {}",
            auc[order[0]], cfg.auc_floor
        )));
    }
    Ok(SelectionReport {
        model_ids: ids.clone(),
        auc: auc.to_vec(),
        correlation: corr.clone(),
        selected: kept.iter().map(|&k| ids[k].clone()).collect(),
        trace,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_auc(s: &[f64], y: &[u8]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] == 1 && y[j] == 0 {
                    den += 1.0;
                    if s[i] > s[j] {
                        num += 1.0;
                    } else if s[i] == s[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_hand_values() {
        assert_eq!(auc_score(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auc_score(&[0.1, 0.4, 0.35, 0.8], &[0, 1, 0, 1]).unwrap(), 1.0);
        assert_eq!(auc_score(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc_score(&[0.3; 5], &[0, 1, 0, 1, 1]).unwrap(), 0.5);
        assert!(auc_score(&[0.3, 0.4], &[1, 1]).is_err());
    }

    fn matrix(ids: &[&str], values: Vec<Vec<f64>>) -> CorrelationMatrix {
        CorrelationMatrix {
            model_ids: ids.iter().map(|s| s.to_string()).collect(),
            values,
            degenerate_pairs: vec![],
        }
    }

    #[test]
    fn duplicate_predictions_are_rejected() {
        let c = matrix(&["a", "b"], vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let r = select_models(&[0.8, 0.8], &c, &SelectionConfig::default()).unwrap();
        assert_eq!(r.selected, vec!["a"]);
        assert!(r.trace[1].reason.starts_with("correlation ceiling"));
    }

    #[test]
    fn nothing_above_floor_is_an_error() {
        let c = matrix(&["a", "b"], vec![vec![1.0, 0.1], vec![0.1, 1.0]]);
        assert!(matches!(
            select_models(&[0.5, 0.4], &c, &SelectionConfig::default()),
            Err(Error::NoModelSelected(_))
        ));
    }

    /// AUC and correlation orderings under which the four-model pool
    /// {forest, boosted trees, SVM, naive Bayes} comes out.
    #[test]
    fn fixture_reproduces_four_model_pool() {
        let ids = [
            "decision_tree", "random_forest", "boosted_trees", "svm_rbf",
            "gaussian_nb", "knn", "logreg",
        ];
        let auc = [0.90, 0.94, 0.93, 0.91, 0.86, 0.85, 0.89];
        let mut v = vec![vec![0.6; 7]; 7];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut set = |a: usize, b: usize, r: f64| {
            v[a][b] = r;
            v[b][a] = r;
        };
        set(0, 1, 0.97); // tree shadows forest
        set(6, 3, 0.96); // logreg shadows svm
        let c = matrix(&ids, v);
        let r = select_models(&auc, &c, &SelectionConfig::default()).unwrap();
        assert_eq!(r.selected, vec!["random_forest", "boosted_trees", "svm_rbf", "gaussian_nb"]);
        let knn = r.trace.iter().find(|t| t.model == "knn").unwrap();
        assert!(knn.reason.starts_with("max_models"));
    }

    #[test]
    fn correlation_matches_pearson() {
        let oof = OofMatrix {
            model_ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            values: (0..9)
                .map(|i| {
                    let p = (i as f64 * 0.37).sin() * 0.4 + 0.5;
                    vec![p, p, 1.0 - p, 0.3]
                })
                .collect(),
            folds: vec![0; 9],
            k_folds: 2,
        };
        let c = prediction_correlation(&oof).unwrap();
        assert_eq!(c.values[0][1], 1.0);
        assert!((c.values[0][2] + 1.0).abs() < 1e-12);
        assert_eq!(c.values[0][3], 0.0);
        assert_eq!(c.degenerate_pairs.len(), 3);
        assert_eq!(c.values[1][2], pearson_r(&oof.column(1), &oof.column(2)).unwrap().r);
        for a in 0..4 {
            assert_eq!(c.values[a][a], 1.0);
            for b in 0..4 {
                assert_eq!(c.values[a][b], c.values[b][a]);
            }
        }
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_count(
            rows in prop::collection::vec((0u8..6, any::<bool>()), 2..60)
        ) {
            let s: Vec<f64> = rows.iter().map(|r| r.0 as f64 / 5.0).collect();
            let mut y: Vec<u8> = rows.iter().map(|r| u8::from(r.1)).collect();
            y[0] = 0;
            y[1] = 1;
            prop_assert_eq!(auc_score(&s, &y).unwrap(), brute_auc(&s, &y));
            let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(auc_score(&t, &y).unwrap(), auc_score(&s, &y).unwrap());
        }

        #[test]
        fn selection_ignores_pool_order(
            auc in prop::collection::vec(0.3f64..1.0, 5),
            r in prop::collection::vec(-1.0f64..1.0, 10),
            rot in 0usize..5
        ) {
            let ids: Vec<String> = (0..5).map(|i| format!("m{i}")).collect();
            let mut v = vec![vec![1.0; 5]; 5];
            let mut t = 0;
            for a in 0..5 {
                for b in a + 1..5 {
                    v[a][b] = r[t];
                    v[b][a] = r[t];
                    t += 1;
                }
            }
            let perm: Vec<usize> = (0..5).map(|i| (i + rot) % 5).collect();
            let c1 = CorrelationMatrix { model_ids: ids.clone(), values: v.clone(), degenerate_pairs: vec![] };
            let c2 = CorrelationMatrix {
                model_ids: perm.iter().map(|&i| ids[i].clone()).collect(),
                values: perm.iter().map(|&a| perm.iter().map(|&b| v[a][b]).collect()).collect(),
                degenerate_pairs: vec![],
            };
            let a2: Vec<f64> = perm.iter().map(|&i| auc[i]).collect();
            let cfg = SelectionConfig::default();
            match (select_models(&auc, &c1, &cfg), select_models(&a2, &c2, &cfg)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x.selected, y.selected);
                    prop_assert_eq!(x.trace, y.trace);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one ordering failed"),
            }
        }
    }
}
