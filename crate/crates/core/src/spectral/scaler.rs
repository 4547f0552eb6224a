use serde::{Deserialize, Serialize};

use super::types::SpectralDataset;
use crate::error::{invalid, Error, Result};

/// Per-feature z-scoring with the population SD. Zero-variance features
/// are flagged and scale to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl StandardScaler {
    pub fn fit_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(invalid("cannot fit a scaler on zero rows"));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        let mut sd = vec![0.0; d];
        let mut degenerate = vec![false; d];
        for f in 0..d {
            let first_v = rows[0][f];
            if rows.iter().all(|r| r[f] == first_v) {
                mean[f] = first_v;
                degenerate[f] = true;
                continue;
            }
            let m = rows.iter().map(|r| r[f]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[f] - m).powi(2)).sum::<f64>() / n;
            mean[f] = m;
            sd[f] = var.sqrt();
            degenerate[f] = sd[f] == 0.0;
        }
        Ok(Self {
            mean,
            sd,
            degenerate,
        })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(f, &x)| {
                if self.degenerate[f] {
                    0.0
                } else {
                    (x - self.mean[f]) / self.sd[f]
                }
            })
            .collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Fits on the given (training) rows only.
pub fn fit_scaler(train: &SpectralDataset) -> Result<StandardScaler> {
    StandardScaler::fit_rows(&train.samples)
}

pub fn apply_scaler(scaler: &StandardScaler, ds: &SpectralDataset) -> Result<SpectralDataset> {
    let rows = scaler.transform(&ds.samples)?;
    Ok(ds.with_rows(ds.grid.clone(), rows))
}
