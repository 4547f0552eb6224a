//! k-nearest neighbours with Euclidean distance.

use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeighting {
    /// Weight `1/d`; neighbours at distance 0 take all the weight.
    InverseDistance,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
    pub weighting: KnnWeighting,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 5,
            weighting: KnnWeighting::InverseDistance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub params: KnnParams,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Knn {
    pub fn fit(params: &KnnParams, data: &LabeledDataset) -> Result<Self> {
        if params.k > data.n() {
            return Err(invalid(format!("knn: k = {} exceeds {} training rows", params.k, data.n())));
        }
        Ok(Self {
            params: *params,
            features: data.features.clone(),
            labels: data.labels.clone(),
        })
    }

    /// Indices and distances of the k nearest rows; ties go to the lower index.
    pub fn neighbours(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut d: Vec<(usize, f64)> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()))
            .collect();
        d.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distance").then(a.0.cmp(&b.0)));
        d.truncate(self.params.k);
        d
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|r| {
                let nb = self.neighbours(r);
                let exact = nb.iter().any(|&(_, d)| d == 0.0);
                let (mut num, mut den) = (0.0, 0.0);
                for &(i, d) in &nb {
                    let w = match self.params.weighting {
                        KnnWeighting::Uniform => 1.0,
                        KnnWeighting::InverseDistance if exact => f64::from(u8::from(d == 0.0)),
                        KnnWeighting::InverseDistance => 1.0 / d,
                    };
                    num += w * f64::from(self.labels[i]);
                    den += w;
                }
                num / den
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(x: Vec<Vec<f64>>, y: Vec<u8>) -> LabeledDataset {
        LabeledDataset::new(x, y).unwrap()
    }

    #[test]
    fn exact_match_with_one_neighbour() {
        let d = ds(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]], vec![0, 1, 0]);
        let m = Knn::fit(&KnnParams { k: 1, ..Default::default() }, &d).unwrap();
        assert_eq!(m.predict(&[vec![1.0, 1.0], vec![2.0, 0.0]]), vec![1.0, 0.0]);
    }

    #[test]
    fn exact_match_dominates_weighted_vote() {
        let d = ds(vec![vec![0.0], vec![0.1], vec![0.2]], vec![1, 0, 0]);
        let m = Knn::fit(&KnnParams { k: 3, ..Default::default() }, &d).unwrap();
        assert_eq!(m.predict(&[vec![0.0]]), vec![1.0]);
    }

    #[test]
    fn all_points_vote_uniformly() {
        let d = ds((0..6).map(|i| vec![i as f64]).collect(), vec![0, 1, 1, 0, 1, 0]);
        let p = KnnParams {
            k: 6,
            weighting: KnnWeighting::Uniform,
        };
        let m = Knn::fit(&p, &d).unwrap();
        assert_eq!(m.predict(&[vec![1e6]]), vec![0.5]);
    }

    #[test]
    fn hand_weighted_vote() {
        // query 0: distances 1 (pos), 2 (neg), 4 (pos); the point at 10 is out
        let d = ds(vec![vec![1.0], vec![-2.0], vec![4.0], vec![10.0]], vec![1, 0, 1, 0]);
        let m = Knn::fit(&KnnParams { k: 3, ..Default::default() }, &d).unwrap();
        let want = (1.0 + 0.25) / (1.0 + 0.5 + 0.25);
        assert!((m.predict(&[vec![0.0]])[0] - want).abs() < 1e-15);
    }

    #[test]
    fn distance_ties_go_to_lower_index() {
        let d = ds(vec![vec![1.0], vec![-1.0], vec![3.0]], vec![0, 1, 1]);
        let m = Knn::fit(&KnnParams { k: 1, ..Default::default() }, &d).unwrap();
        assert_eq!(m.neighbours(&[0.0]), vec![(0, 1.0)]);
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let d = ds(vec![vec![0.0], vec![1.0]], vec![0, 1]);
        assert!(Knn::fit(&KnnParams::default(), &d).is_err());
    }
}
