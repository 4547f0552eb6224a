//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NbParams {
    /// Added to every variance, as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Indexed by label.
    pub log_prior: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

fn mean_var(rows: &[&Vec<f64>], f: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let m = rows.iter().map(|r| r[f]).sum::<f64>() / n;
    let v = rows.iter().map(|r| (r[f] - m) * (r[f] - m)).sum::<f64>() / n;
    (m, v)
}

impl GaussianNb {
    pub fn fit(params: &NbParams, data: &LabeledDataset) -> Result<Self> {
        let d = data.dim();
        let all: Vec<&Vec<f64>> = data.features.iter().collect();
        let max_var = (0..d).map(|f| mean_var(&all, f).1).fold(0.0, f64::max);
        // all features constant: fall back to an absolute floor
        let eps = if max_var > 0.0 {
            params.var_smoothing * max_var
        } else {
            params.var_smoothing.max(1e-9)
        };
        let mut log_prior = [f64::NEG_INFINITY; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        let mut variances = [vec![1.0; d], vec![1.0; d]];
        for c in 0..2u8 {
            let rows: Vec<&Vec<f64>> = data
                .features
                .iter()
                .zip(&data.labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let k = c as usize;
            log_prior[k] = (rows.len() as f64 / data.n() as f64).ln();
            for f in 0..d {
                let (m, v) = mean_var(&rows, f);
                means[k][f] = m;
                variances[k][f] = v + eps;
            }
        }
        Ok(Self {
            log_prior,
            means,
            variances,
        })
    }

    fn joint_log_likelihood(&self, x: &[f64], c: usize) -> f64 {
        let mut s = self.log_prior[c];
        for ((&xi, &m), &v) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
            s -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m) * (xi - m) / v);
        }
        s
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|r| {
                let l0 = self.joint_log_likelihood(r, 0);
                let l1 = self.joint_log_likelihood(r, 1);
                let top = l0.max(l1);
                let (e0, e1) = ((l0 - top).exp(), (l1 - top).exp());
                e1 / (e0 + e1)
            })
            .collect()
    }
}
