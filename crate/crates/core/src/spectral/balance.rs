use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::types::{Label, SpectralDataset};
use crate::error::{invalid, Error, Result};
use crate::seed::rng_from;

/// How non-infected plants are picked from the in-range candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMode {
    /// Closest plant means to the non-infected grand mean; ties by plant id.
    #[default]
    ClosestToMean,
    /// Seeded uniform draw among candidates.
    Random,
}

struct Plant {
    id: String,
    label: Label,
    mean: f64,
}

/// Keeps all infected plants and an equal number of representative
/// non-infected plants whose mean reflectance lies within one SD of the
/// non-infected grand mean. All leaves of a kept plant are retained.
pub fn balance_dataset(ds: &SpectralDataset, mode: BalanceMode, seed: u64) -> Result<SpectralDataset> {
    let mut by_plant: BTreeMap<&str, (Label, f64, usize)> = BTreeMap::new();
    for i in 0..ds.n_samples() {
        let row = &ds.samples[i];
        let row_mean = row.iter().sum::<f64>() / row.len() as f64;
        let entry = by_plant
            .entry(ds.plant_ids[i].as_str())
            .or_insert((ds.labels[i], 0.0, 0));
        if entry.0 != ds.labels[i] {
            return Err(invalid(format!(
                "plant {} has leaves with both labels",
                ds.plant_ids[i]
            )));
        }
        entry.1 += row_mean;
        entry.2 += 1;
    }
    let plants: Vec<Plant> = by_plant
        .into_iter()
        .map(|(id, (label, sum, n))| Plant {
            id: id.to_string(),
            label,
            mean: sum / n as f64,
        })
        .collect();
    let n_inf = plants.iter().filter(|p| p.label.is_infected()).count();
    let non: Vec<&Plant> = plants.iter().filter(|p| !p.label.is_infected()).collect();
    if n_inf == 0 || non.is_empty() {
        return Err(Error::SingleClass("balancing needs both classes".into()));
    }
    if non.len() < n_inf {
        return Err(invalid(format!(
            "{} non-infected plants is fewer than {} infected plants",
            non.len(),
            n_inf
        )));
    }

    let grand = non.iter().map(|p| p.mean).sum::<f64>() / non.len() as f64;
    let sd = (non.iter().map(|p| (p.mean - grand).powi(2)).sum::<f64>() / non.len() as f64).sqrt();
    let limit = sd * (1.0 + 1e-12);
    let mut candidates: Vec<&Plant> = non
        .into_iter()
        .filter(|p| (p.mean - grand).abs() <= limit)
        .collect();
    if candidates.len() < n_inf {
        return Err(Error::BalanceShortfall {
            candidates: candidates.len(),
            needed: n_inf,
            shortfall: n_inf - candidates.len(),
        });
    }
    match mode {
        BalanceMode::ClosestToMean => {
            // stable sort keeps plant-id order among equal distances
            candidates.sort_by(|a, b| {
                (a.mean - grand)
                    .abs()
                    .partial_cmp(&(b.mean - grand).abs())
                    .expect("finite plant means")
            });
        }
        BalanceMode::Random => candidates.shuffle(&mut rng_from(seed)),
    }
    let mut keep: std::collections::BTreeSet<&str> =
        candidates[..n_inf].iter().map(|p| p.id.as_str()).collect();
    keep.extend(plants.iter().filter(|p| p.label.is_infected()).map(|p| p.id.as_str()));

    let idx: Vec<usize> = (0..ds.n_samples())
        .filter(|&i| keep.contains(ds.plant_ids[i].as_str()))
        .collect();
    Ok(ds.subset(&idx))
}
