//! Stratified train / validation / test split.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.65,
            validation: 0.15,
            test: 0.20,
        }
    }
}

impl SplitRatios {
    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.as_array();
        if r.iter().any(|v| !(0.0..=1.0).contains(v)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!(
                "ratios must lie in [0, 1] and sum to 1, got {r:?}"
            )));
        }
        Ok(())
    }
}

/// Sorted row indices per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

/// Per-class counts for validation and test, class 0 first.
///
/// Split totals are `round(ratio × n)` (train takes the rest). Within a split,
/// class counts are the floor or ceiling of the proportional quota; among
/// those choices the one with the smallest worst deviation from the quotas
/// over all six cells wins, ties to fewer class-0 rows in test, then in
/// validation.
fn allocate(class_n: [usize; 2], ratios: &SplitRatios) -> [[usize; 2]; 3] {
    let n = (class_n[0] + class_n[1]) as f64;
    let n_test = (ratios.test * n).round() as usize;
    let n_val = (ratios.validation * n).round() as usize;
    let quota = |r: f64, c: usize| r * class_n[c] as f64;
    let options = |r: f64| {
        let q = quota(r, 0);
        let (lo, hi) = (q.floor() as usize, q.ceil() as usize);
        if lo == hi {
            vec![lo]
        } else {
            vec![lo, hi]
        }
    };
    let mut best: Option<(f64, [[usize; 2]; 3])> = None;
    for t0 in options(ratios.test) {
        for v0 in options(ratios.validation) {
            if t0 > n_test || v0 > n_val {
                continue;
            }
            let (t1, v1) = (n_test - t0, n_val - v0);
            if t0 + v0 > class_n[0] || t1 + v1 > class_n[1] {
                continue;
            }
            let cells = [
                [class_n[0] - t0 - v0, class_n[1] - t1 - v1],
                [v0, v1],
                [t0, t1],
            ];
            let rs = [ratios.train, ratios.validation, ratios.test];
            let worst = (0..3)
                .flat_map(|s| (0..2).map(move |c| (s, c)))
                .map(|(s, c)| (cells[s][c] as f64 - quota(rs[s], c)).abs())
                .fold(0.0, f64::max);
            if best.is_none_or(|(w, _)| worst < w) {
                best = Some((worst, cells));
            }
        }
    }
    best.map(|b| b.1).unwrap_or([[class_n[0], class_n[1]], [0, 0], [0, 0]])
}

/// Shuffles each class with its own seeded stream, then deals test,
/// validation and train rows in that order.
pub fn stratified_split(labels: &[u8], ratios: &SplitRatios, seed: u64) -> Result<DataSplit> {
    ratios.validate()?;
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        if l > 1 {
            return Err(Error::Split(format!("label {l} at row {i} not in {{0, 1}}")));
        }
        by_class[l as usize].push(i);
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::Split("both classes must be present".into()));
    }
    let cells = allocate([by_class[0].len(), by_class[1].len()], ratios);
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (c, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng_from(derive_seed(seed, c as u64)));
        let (t, v) = (cells[2][c], cells[1][c]);
        parts[2].extend_from_slice(&idx[..t]);
        parts[1].extend_from_slice(&idx[t..t + v]);
        parts[0].extend_from_slice(&idx[t + v..]);
    }
    for (p, (name, r)) in parts.iter_mut().zip([
        ("train", ratios.train),
        ("validation", ratios.validation),
        ("test", ratios.test),
    ]) {
        if r > 0.0 && p.is_empty() {
            return Err(Error::Split(format!("{name} split is empty for ratio {r}")));
        }
        p.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(DataSplit {
        train,
        validation,
        test,
        seed,
        stratified: true,
    })
}
