//! Growing degree days and growth stage lookup.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One day of temperature data (°C).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRecord {
    pub date: NaiveDate,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_mean: Option<f64>,
}

impl TemperatureRecord {
    pub fn from_mean(date: NaiveDate, t_mean: f64) -> Self {
        Self {
            date,
            t_min: None,
            t_max: None,
            t_mean: Some(t_mean),
        }
    }

    pub fn from_min_max(date: NaiveDate, t_min: f64, t_max: f64) -> Self {
        Self {
            date,
            t_min: Some(t_min),
            t_max: Some(t_max),
            t_mean: None,
        }
    }

    /// Daily mean: explicit when present, else the min/max midpoint.
    pub fn daily_mean(&self) -> Result<f64> {
        if let Some(m) = self.t_mean {
            if !m.is_finite() {
                return Err(Error::Temperature(format!("{}: non-finite t_mean", self.date)));
            }
            return Ok(m);
        }
        match (self.t_min, self.t_max) {
            (Some(lo), Some(hi)) if lo.is_finite() && hi.is_finite() => {
                if lo > hi {
                    return Err(Error::Temperature(format!(
                        "{}: t_min {lo} exceeds t_max {hi}",
                        self.date
                    )));
                }
                Ok((lo + hi) / 2.0)
            }
            _ => Err(Error::Temperature(format!(
                "{}: needs t_mean or both t_min and t_max",
                self.date
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GddConfig {
    pub t_base: f64,
    /// Clamp daily contributions at zero.
    pub clamp_negative: bool,
}

impl Default for GddConfig {
    fn default() -> Self {
        Self {
            t_base: 10.0,
            clamp_negative: true,
        }
    }
}

/// Daily increments; errors on unordered or duplicate dates.
pub fn daily_increments(records: &[TemperatureRecord], cfg: &GddConfig) -> Result<Vec<f64>> {
    if !cfg.t_base.is_finite() {
        return Err(Error::Temperature("t_base must be finite".into()));
    }
    for p in records.windows(2) {
        if p[1].date <= p[0].date {
            return Err(Error::Temperature(format!(
                "dates not strictly increasing: {} then {}",
                p[0].date, p[1].date
            )));
        }
    }
    records
        .iter()
        .map(|r| {
            let inc = r.daily_mean()? - cfg.t_base;
            Ok(if cfg.clamp_negative { inc.max(0.0) } else { inc })
        })
        .collect()
}

/// Accumulated GDD (°C·day) over the records.
pub fn compute_gdd(records: &[TemperatureRecord], cfg: &GddConfig) -> Result<f64> {
    Ok(daily_increments(records, cfg)?.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub gdd: f64,
}

/// Ordered growth stages with their GDD thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTable {
    stages: Vec<Stage>,
}

pub const PRE_VEGETATIVE: &str = "pre-vegetative";

impl Default for StageTable {
    /// Processing tomato: vegetative, flowering, fruit development, ripening.
    fn default() -> Self {
        let s = |name: &str, gdd| Stage {
            name: name.to_string(),
            gdd,
        };
        Self {
            stages: vec![
                s("vegetative", 585.0),
                s("flowering", 897.0),
                s("fruit development", 1216.0),
                s("ripening", 1568.0),
            ],
        }
    }
}

impl StageTable {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.windows(2).any(|p| !(p[1].gdd > p[0].gdd)) {
            return Err(Error::InvalidInput(
                "stage GDD values must be strictly increasing".into(),
            ));
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Index of the greatest stage whose threshold is ≤ `gdd`; `None` below
    /// the first threshold.
    pub fn stage_index(&self, gdd: f64) -> Option<usize> {
        let n = self.stages.partition_point(|s| s.gdd <= gdd);
        n.checked_sub(1)
    }
}

pub fn stage_of(gdd: f64, table: &StageTable) -> &str {
    match table.stage_index(gdd) {
        Some(i) => &table.stages[i].name,
        None => PRE_VEGETATIVE,
    }
}
