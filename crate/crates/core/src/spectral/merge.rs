use serde::{Deserialize, Serialize};

use super::correlation::pearson_r;
use super::types::{PreprocessConfig, SpectralDataset, WavelengthGrid};
use crate::error::{Error, Result};

const MATCH_TOL_NM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandGroup {
    pub members_nm: Vec<f64>,
    pub representative_nm: f64,
}

/// Audit trail of the band merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandGroupMap {
    pub original_band_count: usize,
    pub reduced_band_count: usize,
    pub groups: Vec<BandGroup>,
}

impl BandGroupMap {
    pub fn representative_grid(&self) -> Result<WavelengthGrid> {
        WavelengthGrid::new(self.groups.iter().map(|g| g.representative_nm).collect())
    }

    /// Checks that the groups partition `grid` into contiguous runs.
    pub fn check_partition(&self, grid: &WavelengthGrid) -> Result<()> {
        let ranges = self.index_ranges(grid)?;
        if ranges.len() != self.reduced_band_count {
            return Err(Error::Grid("reduced_band_count differs from group count".into()));
        }
        Ok(())
    }

    /// Index ranges of each group on `grid`.
    fn index_ranges(&self, grid: &WavelengthGrid) -> Result<Vec<(usize, usize)>> {
        let w = grid.as_slice();
        if w.len() != self.original_band_count {
            return Err(Error::DimensionMismatch {
                expected: self.original_band_count,
                got: w.len(),
            });
        }
        let mut next = 0usize;
        let mut out = Vec::with_capacity(self.groups.len());
        for (gi, g) in self.groups.iter().enumerate() {
            if g.members_nm.is_empty() {
                return Err(Error::Grid(format!("band group {gi} is empty")));
            }
            let start = next;
            for &m in &g.members_nm {
                if next >= w.len() || (w[next] - m).abs() > MATCH_TOL_NM {
                    return Err(Error::Grid(format!(
                        "band group {gi} member {m} nm does not match grid"
                    )));
                }
                next += 1;
            }
            out.push((start, next));
        }
        if next != w.len() {
            return Err(Error::Grid(format!(
                "band groups cover {next} of {} bands",
                w.len()
            )));
        }
        Ok(out)
    }

    /// Averages member columns of `ds` into one feature per group.
    pub fn apply(&self, ds: &SpectralDataset) -> Result<SpectralDataset> {
        let ranges = self.index_ranges(&ds.grid)?;
        let rows = ds
            .samples
            .iter()
            .map(|r| {
                ranges
                    .iter()
                    .map(|&(a, b)| r[a..b].iter().sum::<f64>() / (b - a) as f64)
                    .collect()
            })
            .collect();
        Ok(ds.with_rows(self.representative_grid()?, rows))
    }
}

/// Left-to-right, seed-anchored grouping of adjacent bands.
///
/// A band joins the open group when its correlation with the group's first
/// band is strictly above the threshold. With a threshold of 1.0 only
/// columns identical to the seed join.
pub fn merge_correlated_bands(
    ds: &SpectralDataset,
    cfg: &PreprocessConfig,
) -> Result<(SpectralDataset, BandGroupMap)> {
    cfg.validate()?;
    if ds.n_samples() < 2 {
        return Err(Error::CorrelationUndefined(format!(
            "{} sample(s); need at least 2",
            ds.n_samples()
        )));
    }
    let n_bands = ds.n_bands();
    let columns: Vec<Vec<f64>> = (0..n_bands).map(|b| ds.column(b)).collect();
    let w = ds.grid.as_slice();
    let duplicates_only = cfg.corr_threshold >= 1.0;

    let mut groups = Vec::new();
    let mut seed = 0usize;
    while seed < n_bands {
        let mut end = seed + 1;
        while end < n_bands {
            let joins = if duplicates_only {
                columns[end] == columns[seed]
            } else {
                pearson_r(&columns[seed], &columns[end])?.r > cfg.corr_threshold
            };
            if !joins {
                break;
            }
            end += 1;
        }
        let members: Vec<f64> = w[seed..end].to_vec();
        let representative = members.iter().sum::<f64>() / members.len() as f64;
        groups.push(BandGroup {
            members_nm: members,
            representative_nm: representative,
        });
        seed = end;
    }
    let map = BandGroupMap {
        original_band_count: n_bands,
        reduced_band_count: groups.len(),
        groups,
    };
    let merged = map.apply(ds)?;
    Ok((merged, map))
}
