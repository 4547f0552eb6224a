use serde::{Deserialize, Serialize};

use super::types::{Label, SpectralDataset};
use crate::error::{invalid, Error, Result};

/// Per-band class means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMeanProfile {
    pub wavelengths_nm: Vec<f64>,
    pub mean_non_infected: Vec<f64>,
    pub mean_infected: Vec<f64>,
}

impl ClassMeanProfile {
    pub fn from_dataset(ds: &SpectralDataset) -> Result<Self> {
        let d = ds.n_bands();
        let mut sums = [vec![0.0; d], vec![0.0; d]];
        let mut counts = [0usize; 2];
        for (row, label) in ds.samples.iter().zip(&ds.labels) {
            let c = label.as_u8() as usize;
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        if counts.contains(&0) {
            return Err(Error::SingleClass("class means need both classes".into()));
        }
        let [non, inf] = sums;
        let mean = |v: Vec<f64>, n: usize| v.into_iter().map(|s| s / n as f64).collect();
        Ok(Self {
            wavelengths_nm: ds.grid.as_slice().to_vec(),
            mean_non_infected: mean(non, counts[Label::NonInfected.as_u8() as usize]),
            mean_infected: mean(inf, counts[Label::Infected.as_u8() as usize]),
        })
    }
}

/// `(μ_non − μ_inf) / μ_non` for every band.
pub fn relative_mean_difference(profile: &ClassMeanProfile) -> Result<Vec<f64>> {
    let n = profile.wavelengths_nm.len();
    if profile.mean_non_infected.len() != n || profile.mean_infected.len() != n {
        return Err(invalid("class mean profile lengths differ"));
    }
    profile
        .mean_non_infected
        .iter()
        .zip(&profile.mean_infected)
        .enumerate()
        .map(|(b, (&non, &inf))| {
            if !non.is_finite() || !inf.is_finite() {
                return Err(invalid(format!("non-finite class mean at band {b}")));
            }
            if non == 0.0 {
                return Err(Error::UndefinedRmd {
                    band: b,
                    wavelength_nm: profile.wavelengths_nm[b],
                });
            }
            Ok((non - inf) / non)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(non: Vec<f64>, inf: Vec<f64>) -> ClassMeanProfile {
        ClassMeanProfile {
            wavelengths_nm: (0..non.len()).map(|i| 1400.0 + i as f64).collect(),
            mean_non_infected: non,
            mean_infected: inf,
        }
    }

    #[test]
    fn identical_classes_give_zero() {
        let p = profile(vec![0.2, 0.5, 0.31], vec![0.2, 0.5, 0.31]);
        assert_eq!(relative_mean_difference(&p).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn hand_value() {
        let p = profile(vec![0.4], vec![0.3]);
        assert!((relative_mean_difference(&p).unwrap()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_mean_is_an_error() {
        let p = profile(vec![0.4, 0.0], vec![0.3, 0.1]);
        assert!(matches!(
            relative_mean_difference(&p),
            Err(Error::UndefinedRmd { band: 1, .. })
        ));
    }

    #[test]
    fn invariant_under_common_positive_scaling() {
        let p = profile(vec![0.4, 0.25, 0.6], vec![0.3, 0.27, 0.61]);
        let k = [2.5, 0.3, 7.0];
        let q = profile(
            p.mean_non_infected.iter().zip(k).map(|(a, s)| a * s).collect(),
            p.mean_infected.iter().zip(k).map(|(a, s)| a * s).collect(),
        );
        let a = relative_mean_difference(&p).unwrap();
        let b = relative_mean_difference(&q).unwrap();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
