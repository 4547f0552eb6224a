use super::types::{DetectorLayout, PreprocessConfig, Spectrum, WavelengthGrid};
use crate::error::{Error, Result};

const JUNCTION_TOL_NM: f64 = 1e-9;

/// Surviving band indices plus warnings about junctions that could not be
/// located in the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimOutcome {
    pub keep: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Band indices that survive junction trimming and the analysis-range cut.
///
/// Junction trimming counts native bands, so it runs before the range cut.
pub fn trim_indices(
    grid: &WavelengthGrid,
    layout: &DetectorLayout,
    cfg: &PreprocessConfig,
) -> Result<TrimOutcome> {
    layout.validate()?;
    cfg.validate()?;
    let w = grid.as_slice();
    let mut drop = vec![false; w.len()];
    let mut warnings = Vec::new();

    if cfg.trim_bands > 0 {
        for j in layout.junctions() {
            let split = w.partition_point(|&x| x <= j + JUNCTION_TOL_NM);
            if split == 0 || split == w.len() {
                warnings.push(format!("junction at {j} nm not inside grid; not trimmed"));
                continue;
            }
            let lo = split.saturating_sub(cfg.trim_bands);
            let hi = (split + cfg.trim_bands).min(w.len());
            for d in &mut drop[lo..hi] {
                *d = true;
            }
        }
    }

    let (low, high) = cfg.analysis_range_nm;
    let keep: Vec<usize> = (0..w.len())
        .filter(|&i| !drop[i] && w[i] >= low && w[i] <= high)
        .collect();
    if keep.is_empty() {
        return Err(Error::OverTrimmed);
    }
    Ok(TrimOutcome { keep, warnings })
}

/// Removes noisy bands around detector junctions and bands outside the
/// analysis range.
pub fn trim_detector_edges(
    s: &Spectrum,
    layout: &DetectorLayout,
    cfg: &PreprocessConfig,
) -> Result<(Spectrum, Vec<String>)> {
    let out = trim_indices(&s.grid, layout, cfg)?;
    let grid = s.grid.select(&out.keep)?;
    let reflectance = out.keep.iter().map(|&i| s.reflectance[i]).collect();
    Ok((Spectrum { grid, reflectance }, out.warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(w: Vec<f64>) -> Spectrum {
        let n = w.len();
        Spectrum::new(WavelengthGrid::new(w).unwrap(), vec![0.3; n]).unwrap()
    }

    #[test]
    fn zero_trim_full_range_is_identity() {
        let s = spectrum((0..50).map(|i| 990.0 + i as f64 * 0.5).collect());
        let cfg = PreprocessConfig {
            trim_bands: 0,
            analysis_range_nm: (990.0, 1015.0),
            ..Default::default()
        };
        let (out, warn) = trim_detector_edges(&s, &DetectorLayout::default(), &cfg).unwrap();
        assert_eq!(out, s);
        assert!(warn.is_empty());
    }

    #[test]
    fn removes_five_bands_each_side_of_1000() {
        // native: 1.5 nm steps up to 1000, then 3.8 nm steps
        let mut w: Vec<f64> = (0..20).rev().map(|k| 1000.0 - 1.5 * k as f64).collect();
        w.extend((1..=20).map(|k| ((1000.0 + 3.8 * k as f64) * 1e4).round() / 1e4));
        let s = spectrum(w.clone());
        let cfg = PreprocessConfig {
            analysis_range_nm: (400.0, 2500.0),
            ..Default::default()
        };
        let (out, warn) = trim_detector_edges(&s, &DetectorLayout::default(), &cfg).unwrap();
        // hand enumeration: indices 15..=19 are 994.0..=1000.0, 20..=24 are 1003.8..=1019.0
        let removed: Vec<f64> = w[15..25].to_vec();
        assert_eq!(removed[0], 994.0);
        assert_eq!(removed[4], 1000.0);
        assert!((removed[5] - 1003.8).abs() < 1e-9);
        for r in &removed {
            assert!(!out.grid.as_slice().contains(r));
        }
        assert_eq!(out.grid.len(), w.len() - 10);
        assert_eq!(out.grid.as_slice()[14], 992.5);
        assert!((out.grid.as_slice()[15] - 1022.8).abs() < 1e-9);
        // the 1890 junction lies beyond this grid
        assert_eq!(warn.len(), 1);
        assert!(warn[0].contains("1890"));
    }

    #[test]
    fn band_below_analysis_range_is_dropped() {
        let s = spectrum(vec![372.0, 399.0, 400.0, 450.0]);
        let (out, _) =
            trim_detector_edges(&s, &DetectorLayout::default(), &PreprocessConfig::default())
                .unwrap();
        assert_eq!(out.grid.as_slice(), &[400.0, 450.0]);
    }

    #[test]
    fn over_trim_is_an_error() {
        let s = spectrum(vec![350.0, 360.0]);
        let err = trim_detector_edges(&s, &DetectorLayout::default(), &PreprocessConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::OverTrimmed));
    }
}
