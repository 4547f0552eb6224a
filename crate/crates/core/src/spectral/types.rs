use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub(crate) const GRID_MIN_NM: f64 = 300.0;
pub(crate) const GRID_MAX_NM: f64 = 2600.0;
pub(crate) const REFLECTANCE_MAX: f64 = 1.5;

/// Strictly increasing wavelengths in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WavelengthGrid(Vec<f64>);

impl WavelengthGrid {
    pub fn new(wavelengths_nm: Vec<f64>) -> Result<Self> {
        if wavelengths_nm.is_empty() {
            return Err(Error::Grid("empty wavelength grid".into()));
        }
        for (i, &w) in wavelengths_nm.iter().enumerate() {
            if !w.is_finite() || !(GRID_MIN_NM..=GRID_MAX_NM).contains(&w) {
                return Err(Error::Grid(format!(
                    "wavelength {w} at index {i} outside [{GRID_MIN_NM}, {GRID_MAX_NM}] nm"
                )));
            }
        }
        if let Some(i) = wavelengths_nm.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::Grid(format!(
                "wavelengths not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self(wavelengths_nm))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Keeps only the listed indices (must be increasing).
    pub(crate) fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.0[i]).collect())
    }

    /// Same wavelengths within `tol` nm.
    pub fn matches(&self, other: &WavelengthGrid, tol: f64) -> bool {
        self.len() == other.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// One reflectance curve on a wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: WavelengthGrid,
    pub reflectance: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, reflectance: Vec<f64>) -> Result<Self> {
        if grid.len() != reflectance.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: reflectance.len(),
            });
        }
        check_reflectance_row(&reflectance).map_err(invalid)?;
        Ok(Self { grid, reflectance })
    }
}

pub(crate) fn check_reflectance_row(row: &[f64]) -> std::result::Result<(), String> {
    for (b, &v) in row.iter().enumerate() {
        if !v.is_finite() {
            return Err(format!("non-finite reflectance at band {b}"));
        }
        if !(0.0..=REFLECTANCE_MAX).contains(&v) {
            return Err(format!("reflectance {v} at band {b} outside [0, {REFLECTANCE_MAX}]"));
        }
    }
    Ok(())
}

/// Binary class of a leaf sample. Serialized as 0 / 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NonInfected,
    Infected,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::NonInfected),
            1 => Some(Label::Infected),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::NonInfected => 0,
            Label::Infected => 1,
        }
    }

    pub fn is_infected(self) -> bool {
        self == Label::Infected
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::NonInfected => Label::Infected,
            Label::Infected => Label::NonInfected,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Label::from_u8(v).ok_or_else(|| serde::de::Error::custom(format!("label {v} not in {{0, 1}}")))
    }
}

/// Wavelength-indexed samples with labels and provenance.
///
/// `samples` holds one row per leaf. Rows loaded from disk or generated are
/// reflectance; after scaling they hold z-scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataset {
    pub grid: WavelengthGrid,
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub sample_ids: Vec<String>,
    pub plant_ids: Vec<String>,
    pub stage_gdd: Vec<f64>,
}

impl SpectralDataset {
    /// Builds a dataset and checks shape and reflectance invariants.
    pub fn new(
        grid: WavelengthGrid,
        samples: Vec<Vec<f64>>,
        labels: Vec<Label>,
        sample_ids: Vec<String>,
        plant_ids: Vec<String>,
        stage_gdd: Vec<f64>,
    ) -> Result<Self> {
        let ds = Self {
            grid,
            samples,
            labels,
            sample_ids,
            plant_ids,
            stage_gdd,
        };
        ds.check_shape()?;
        ds.check_reflectance()?;
        Ok(ds)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_bands(&self) -> usize {
        self.grid.len()
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        let n = self.samples.len();
        if self.labels.len() != n
            || self.sample_ids.len() != n
            || self.plant_ids.len() != n
            || self.stage_gdd.len() != n
        {
            return Err(invalid(format!(
                "row count mismatch: {} samples, {} labels, {} sample ids, {} plant ids, {} stages",
                n,
                self.labels.len(),
                self.sample_ids.len(),
                self.plant_ids.len(),
                self.stage_gdd.len()
            )));
        }
        for (i, row) in self.samples.iter().enumerate() {
            if row.len() != self.grid.len() {
                return Err(invalid(format!(
                    "sample {i} has {} values for {} bands",
                    row.len(),
                    self.grid.len()
                )));
            }
        }
        Ok(())
    }

    pub fn check_reflectance(&self) -> Result<()> {
        for (i, row) in self.samples.iter().enumerate() {
            check_reflectance_row(row).map_err(|m| invalid(format!("sample {i}: {m}")))?;
        }
        Ok(())
    }

    /// Rows with the given indices, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            sample_ids: idx.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            plant_ids: idx.iter().map(|&i| self.plant_ids[i].clone()).collect(),
            stage_gdd: idx.iter().map(|&i| self.stage_gdd[i]).collect(),
        }
    }

    /// Same metadata, new grid and rows.
    pub(crate) fn with_rows(&self, grid: WavelengthGrid, samples: Vec<Vec<f64>>) -> Self {
        Self {
            grid,
            samples,
            labels: self.labels.clone(),
            sample_ids: self.sample_ids.clone(),
            plant_ids: self.plant_ids.clone(),
            stage_gdd: self.stage_gdd.clone(),
        }
    }

    pub fn label_bits(&self) -> Vec<u8> {
        self.labels.iter().map(|l| l.as_u8()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn spectrum(&self, i: usize) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            reflectance: self.samples[i].clone(),
        }
    }

    /// Column `b` as a vector.
    pub fn column(&self, b: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r[b]).collect()
    }
}

/// One detector array: covered range and nominal sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSegment {
    pub range_start_nm: f64,
    pub range_end_nm: f64,
    pub nominal_bandwidth_nm: f64,
}

/// Spectroradiometer detector arrangement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorLayout {
    pub segments: Vec<DetectorSegment>,
    /// Number of noisy native bands on each side of an interior junction.
    pub junction_trim: usize,
}

impl Default for DetectorLayout {
    fn default() -> Self {
        let seg = |a, b, w| DetectorSegment {
            range_start_nm: a,
            range_end_nm: b,
            nominal_bandwidth_nm: w,
        };
        Self {
            segments: vec![
                seg(350.0, 1000.0, 1.5),
                seg(1000.0, 1890.0, 3.8),
                seg(1890.0, 2500.0, 2.5),
            ],
            junction_trim: 5,
        }
    }
}

impl DetectorLayout {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(invalid("detector layout has no segments"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.range_start_nm < s.range_end_nm) || !(s.nominal_bandwidth_nm > 0.0) {
                return Err(invalid(format!("detector segment {i} is malformed")));
            }
        }
        for (i, p) in self.segments.windows(2).enumerate() {
            if p[0].range_end_nm != p[1].range_start_nm {
                return Err(invalid(format!(
                    "detector segments {i} and {} are not contiguous",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Wavelengths where one detector hands over to the next.
    pub fn junctions(&self) -> Vec<f64> {
        self.segments
            .windows(2)
            .map(|p| p[0].range_end_nm)
            .collect()
    }

    /// Native sampling grid. The first segment is anchored at its upper end,
    /// later segments start one bandwidth past the junction.
    pub fn native_grid(&self) -> Result<WavelengthGrid> {
        self.validate()?;
        let round = |x: f64| (x * 1e4).round() / 1e4;
        let mut out = Vec::new();
        for (si, s) in self.segments.iter().enumerate() {
            let w = s.nominal_bandwidth_nm;
            if si == 0 {
                let n = ((s.range_end_nm - s.range_start_nm) / w + 1e-9).floor() as usize;
                out.extend((0..=n).rev().map(|k| round(s.range_end_nm - k as f64 * w)));
            } else {
                let n = ((s.range_end_nm - s.range_start_nm) / w + 1e-9).floor() as usize;
                out.extend((1..=n).map(|k| round(s.range_start_nm + k as f64 * w)));
            }
        }
        WavelengthGrid::new(out)
    }
}

/// Deterministic preprocessing recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub analysis_range_nm: (f64, f64),
    pub trim_bands: usize,
    pub target_resolution_nm: f64,
    pub sg_order: usize,
    pub sg_window: usize,
    pub corr_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            analysis_range_nm: (400.0, 2500.0),
            trim_bands: 5,
            target_resolution_nm: 1.0,
            sg_order: 2,
            sg_window: 7,
            corr_threshold: 0.99,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.analysis_range_nm;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("analysis range ({lo}, {hi}) must satisfy low < high")));
        }
        if self.sg_window % 2 == 0 || self.sg_window <= self.sg_order {
            return Err(invalid(format!(
                "sg_window {} must be odd and greater than sg_order {}",
                self.sg_window, self.sg_order
            )));
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return Err(invalid(format!(
                "corr_threshold {} outside (0, 1]",
                self.corr_threshold
            )));
        }
        if !(self.target_resolution_nm > 0.0) || !self.target_resolution_nm.is_finite() {
            return Err(invalid("target_resolution_nm must be positive"));
        }
        Ok(())
    }
}
