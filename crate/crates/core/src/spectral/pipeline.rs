use serde::{Deserialize, Serialize};

use super::merge::{merge_correlated_bands, BandGroupMap};
use super::resample::ResamplePlan;
use super::savgol::savgol_dataset;
use super::scaler::StandardScaler;
use super::trim::trim_indices;
use super::types::{DetectorLayout, PreprocessConfig, SpectralDataset, WavelengthGrid};
use crate::error::{Error, Result};

const NATIVE_MATCH_TOL_NM: f64 = 1e-6;

/// Output of trim → resample → smooth.
#[derive(Debug, Clone)]
pub struct SmoothedData {
    pub dataset: SpectralDataset,
    pub warnings: Vec<String>,
}

pub fn smooth_stage(
    ds: &SpectralDataset,
    layout: &DetectorLayout,
    cfg: &PreprocessConfig,
) -> Result<SmoothedData> {
    cfg.validate()?;
    let trim = trim_indices(&ds.grid, layout, cfg)?;
    let grid = ds.grid.select(&trim.keep)?;
    let rows: Vec<Vec<f64>> = ds
        .samples
        .iter()
        .map(|r| trim.keep.iter().map(|&i| r[i]).collect())
        .collect();
    let trimmed = ds.with_rows(grid, rows);
    let plan = ResamplePlan::new(&trimmed.grid, cfg)?;
    let resampled = plan.apply_dataset(&trimmed);
    let smoothed = savgol_dataset(&resampled, cfg)?;
    Ok(SmoothedData {
        dataset: smoothed,
        warnings: trim.warnings,
    })
}

/// Preprocessing state learned from a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocess {
    pub config: PreprocessConfig,
    pub layout: DetectorLayout,
    pub native_grid_nm: WavelengthGrid,
    pub band_group_map: BandGroupMap,
    pub scaler: StandardScaler,
}

impl FittedPreprocess {
    /// Fits the band map and scaler on the rows in `train_idx` of `ds`
    /// (native grid). Returns the state plus the merged, unscaled reflectance
    /// of every row.
    pub fn fit(
        ds: &SpectralDataset,
        train_idx: &[usize],
        layout: &DetectorLayout,
        cfg: &PreprocessConfig,
    ) -> Result<(Self, SpectralDataset)> {
        let smoothed = smooth_stage(ds, layout, cfg)?.dataset;
        let (_, map) = merge_correlated_bands(&smoothed.subset(train_idx), cfg)?;
        let merged = map.apply(&smoothed)?;
        let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| merged.samples[i].clone()).collect();
        let scaler = StandardScaler::fit_rows(&train_rows)?;
        Ok((
            Self {
                config: cfg.clone(),
                layout: layout.clone(),
                native_grid_nm: ds.grid.clone(),
                band_group_map: map,
                scaler,
            },
            merged,
        ))
    }

    pub fn check_native(&self, ds: &SpectralDataset) -> Result<()> {
        if !ds.grid.matches(&self.native_grid_nm, NATIVE_MATCH_TOL_NM) {
            return Err(Error::Grid(format!(
                "input grid ({} bands, {}..{} nm) does not match the fitted native grid ({} bands)",
                ds.grid.len(),
                ds.grid.first(),
                ds.grid.last(),
                self.native_grid_nm.len()
            )));
        }
        Ok(())
    }

    /// Native reflectance → merged, unscaled reflectance.
    pub fn merge_only(&self, ds: &SpectralDataset) -> Result<SpectralDataset> {
        self.check_native(ds)?;
        ds.check_reflectance()?;
        let smoothed = smooth_stage(ds, &self.layout, &self.config)?.dataset;
        self.band_group_map.apply(&smoothed)
    }

    /// Native reflectance → scaled model features.
    pub fn transform(&self, ds: &SpectralDataset) -> Result<SpectralDataset> {
        let merged = self.merge_only(ds)?;
        let rows = self.scaler.transform(&merged.samples)?;
        Ok(merged.with_rows(merged.grid.clone(), rows))
    }
}
