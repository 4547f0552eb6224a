use rayon::prelude::*;

use super::types::{PreprocessConfig, SpectralDataset, Spectrum, WavelengthGrid};
use crate::error::{Error, Result};

const COINCIDE_TOL_NM: f64 = 1e-9;

/// Linear interpolation weights from a native grid onto a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplePlan {
    pub target: WavelengthGrid,
    /// (left native index, weight on right neighbour)
    taps: Vec<(usize, f64)>,
}

impl ResamplePlan {
    /// Target grid: multiples of the resolution between
    /// `max(native_min, low)` and `min(native_max, high)`.
    pub fn new(native: &WavelengthGrid, cfg: &PreprocessConfig) -> Result<Self> {
        if native.len() < 2 {
            return Err(Error::Grid(format!(
                "resampling needs at least 2 native bands, got {}",
                native.len()
            )));
        }
        let res = cfg.target_resolution_nm;
        let lo = native.first().max(cfg.analysis_range_nm.0);
        let hi = native.last().min(cfg.analysis_range_nm.1);
        let k0 = (lo / res - 1e-9).ceil() as i64;
        let k1 = (hi / res + 1e-9).floor() as i64;
        if k1 < k0 {
            return Err(Error::Grid("no target wavelengths inside native range".into()));
        }
        let w = native.as_slice();
        let mut targets = Vec::with_capacity((k1 - k0 + 1) as usize);
        let mut taps = Vec::with_capacity(targets.capacity());
        let mut j = 0usize;
        for k in k0..=k1 {
            let t = k as f64 * res;
            while j + 2 < w.len() && w[j + 1] < t - COINCIDE_TOL_NM {
                j += 1;
            }
            let tap = if (w[j] - t).abs() <= COINCIDE_TOL_NM {
                (j, 0.0)
            } else if (w[j + 1] - t).abs() <= COINCIDE_TOL_NM {
                (j + 1, 0.0)
            } else {
                let frac = (t - w[j]) / (w[j + 1] - w[j]);
                (j, frac.clamp(0.0, 1.0))
            };
            targets.push(t);
            taps.push(tap);
        }
        Ok(Self {
            target: WavelengthGrid::new(targets)?,
            taps,
        })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        self.taps
            .iter()
            .map(|&(j, f)| {
                if f == 0.0 {
                    row[j]
                } else {
                    row[j] + f * (row[j + 1] - row[j])
                }
            })
            .collect()
    }

    pub fn apply_dataset(&self, ds: &SpectralDataset) -> SpectralDataset {
        let rows = ds.samples.par_iter().map(|r| self.apply(r)).collect();
        ds.with_rows(self.target.clone(), rows)
    }
}

/// Linear interpolation onto a uniform grid; never extrapolates.
pub fn resample_uniform(s: &Spectrum, cfg: &PreprocessConfig) -> Result<Spectrum> {
    let plan = ResamplePlan::new(&s.grid, cfg)?;
    let reflectance = plan.apply(&s.reflectance);
    Ok(Spectrum {
        grid: plan.target,
        reflectance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sp(w: Vec<f64>, r: Vec<f64>) -> Spectrum {
        Spectrum::new(WavelengthGrid::new(w).unwrap(), r).unwrap()
    }

    #[test]
    fn identity_on_target_grid() {
        let w: Vec<f64> = (500..520).map(|x| x as f64).collect();
        let r: Vec<f64> = (0..20).map(|i| 0.1 + 0.01 * (i as f64).sin().abs()).collect();
        let s = sp(w, r);
        assert_eq!(resample_uniform(&s, &PreprocessConfig::default()).unwrap(), s);
    }

    #[test]
    fn linear_midpoint() {
        let s = sp(vec![1000.0, 1002.0], vec![0.2, 0.4]);
        let out = resample_uniform(&s, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.grid.as_slice(), &[1000.0, 1001.0, 1002.0]);
        assert!((out.reflectance[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn full_range_gives_2101_bands() {
        let w: Vec<f64> = (0..=1404).map(|k| 395.0 + 1.5 * k as f64).collect();
        assert!(*w.last().unwrap() >= 2500.0);
        let n = w.len();
        let s = sp(w, vec![0.4; n]);
        let out = resample_uniform(&s, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.grid.len(), 2101);
        assert_eq!(out.grid.first(), 400.0);
        assert_eq!(out.grid.last(), 2500.0);
    }

    #[test]
    fn needs_two_bands() {
        let s = sp(vec![500.0], vec![0.1]);
        assert!(resample_uniform(&s, &PreprocessConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn resampling_is_idempotent(
            start in 400.0f64..450.0,
            steps in proptest::collection::vec(0.3f64..4.0, 5..60),
            vals in proptest::collection::vec(0.0f64..1.0, 60),
        ) {
            let mut w = vec![start];
            for s in &steps {
                let next = w.last().unwrap() + s;
                w.push(next);
            }
            let r: Vec<f64> = vals.iter().cycle().take(w.len()).copied().collect();
            prop_assume!(w.last().unwrap() - w[0] >= 2.0);
            let s = sp(w, r);
            let cfg = PreprocessConfig::default();
            let once = resample_uniform(&s, &cfg).unwrap();
            let twice = resample_uniform(&once, &cfg).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
