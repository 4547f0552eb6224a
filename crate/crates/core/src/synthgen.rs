//! Synthetic leaf spectra with a parasite effect at the water bands.
//!
//! A leaf spectrum is
//!
//! ```text
//! R(λ) = B(λ) + (1 − g(λ))³·(o + m·B(λ)) − d·g(λ) + ε(λ)
//! ```
//!
//! where `B` is the baseline vegetation curve, `g` the summed tapered
//! Gaussian dip shape (1 at each centre, 0 beyond 4σ), `o` and `m` per-leaf
//! brightness offset and scale, `d` the plant's dip depth and `ε` detector
//! noise. Class enters only through `d`: `base ± δ/2` (sign by stage preset)
//! plus a per-plant water-content jitter. Brightness variation is kept out of
//! the dip cores so class signal stays at the water bands.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};
use crate::spectral::{DetectorLayout, Label, SpectralDataset, WavelengthGrid};

/// Tapered dip support in units of σ.
const DIP_SUPPORT: f64 = 4.0;
/// Native bands on each side of a junction that carry artifacts.
/// Leaf brightness terms fade inside the dips as (1 - g)^this.
const BRIGHTNESS_TAPER: i32 = 3;
const ARTIFACT_BANDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StagePreset {
    /// Infected leaves hold less water: shallower dips.
    #[default]
    Early,
    /// Reversed: infected dips deeper.
    Late,
}

impl StagePreset {
    pub fn sign(self) -> f64 {
        match self {
            StagePreset::Early => 1.0,
            StagePreset::Late => -1.0,
        }
    }

    pub fn default_gdd(self) -> f64 {
        match self {
            StagePreset::Early => 585.0,
            StagePreset::Late => 1568.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_plants_per_class: usize,
    /// Overrides the non-infected plant count (for balancing runs).
    pub n_non_infected_plants: Option<usize>,
    pub leaves_per_plant: usize,
    pub preset: StagePreset,
    /// `None` uses the preset's GDD.
    pub stage_gdd: Option<f64>,
    pub dip_centers_nm: Vec<f64>,
    pub dip_width_nm: f64,
    pub base_dip_depth: f64,
    /// Class effect δ ≥ 0 on dip depth.
    pub effect: f64,
    pub noise_sd: f64,
    pub junction_artifact_sd: f64,
    /// Per-plant dip depth jitter, uniform on ±this.
    pub depth_jitter: f64,
    /// Per-leaf additive brightness, uniform on [0, this].
    pub leaf_offset_max: f64,
    /// Per-leaf brightness scale, uniform on ±this.
    pub leaf_scale_jitter: f64,
    pub layout: DetectorLayout,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_plants_per_class: 49,
            n_non_infected_plants: None,
            leaves_per_plant: 2,
            preset: StagePreset::Early,
            stage_gdd: None,
            dip_centers_nm: vec![1450.0, 1940.0],
            dip_width_nm: 40.0,
            base_dip_depth: 0.25,
            effect: 0.05,
            noise_sd: 0.01,
            junction_artifact_sd: 0.05,
            depth_jitter: 0.03,
            leaf_offset_max: 0.4,
            leaf_scale_jitter: 0.1,
            layout: DetectorLayout::default(),
            seed: 0,
        }
    }
}

/// Signal-to-noise of the class effect at the dip centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    /// `None` when noise is zero and the effect is not.
    pub value: Option<f64>,
    pub infinite: bool,
}

pub fn effect_size(cfg: &SynthConfig) -> EffectSize {
    if cfg.effect == 0.0 {
        EffectSize {
            value: Some(0.0),
            infinite: false,
        }
    } else if cfg.noise_sd == 0.0 {
        EffectSize {
            value: None,
            infinite: true,
        }
    } else {
        EffectSize {
            value: Some(cfg.effect / cfg.noise_sd),
            infinite: false,
        }
    }
}

fn cosine_step(x: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    y0 + (y1 - y0) * (1.0 - (std::f64::consts::PI * t).cos()) / 2.0
}

/// Vegetation reflectance without water dips.
pub fn baseline_curve(wl: f64) -> f64 {
    const EDGE_MID: f64 = 715.0;
    const EDGE_SCALE: f64 = 12.0;
    let sig = |x: f64| 1.0 / (1.0 + (-(x - EDGE_MID) / EDGE_SCALE).exp());
    if wl < 400.0 {
        0.08
    } else if wl < 550.0 {
        cosine_step(wl, 400.0, 550.0, 0.08, 0.15)
    } else if wl < 670.0 {
        cosine_step(wl, 550.0, 670.0, 0.15, 0.05)
    } else if wl < 760.0 {
        let t = (sig(wl) - sig(670.0)) / (sig(760.0) - sig(670.0));
        0.05 + 0.45 * t
    } else if wl <= 1300.0 {
        0.50
    } else {
        0.50 - 0.35 * (wl.min(2500.0) - 1300.0) / 1200.0
    }
}

/// Tapered Gaussian: 1 at the centre, exactly 0 from 4σ out.
pub fn dip_shape(wl: f64, center: f64, sigma: f64) -> f64 {
    let u = (wl - center) / sigma;
    if u.abs() >= DIP_SUPPORT {
        return 0.0;
    }
    let floor = (-DIP_SUPPORT * DIP_SUPPORT / 2.0).exp();
    ((-u * u / 2.0).exp() - floor) / (1.0 - floor)
}

fn dips(cfg: &SynthConfig, wl: f64) -> f64 {
    cfg.dip_centers_nm
        .iter()
        .map(|&c| dip_shape(wl, c, cfg.dip_width_nm))
        .sum::<f64>()
        .min(1.0)
}

/// Class dip depth before the per-plant jitter.
pub fn class_depth(cfg: &SynthConfig, label: Label) -> f64 {
    let half = cfg.preset.sign() * cfg.effect / 2.0;
    match label {
        Label::Infected => cfg.base_dip_depth - half,
        Label::NonInfected => cfg.base_dip_depth + half,
    }
}

/// Noise-free leaf curve for given depth and brightness terms.
fn leaf_curve(cfg: &SynthConfig, wl: f64, depth: f64, offset: f64, scale: f64) -> f64 {
    let b = baseline_curve(wl);
    let g = dips(cfg, wl);
    b + (1.0 - g).powi(BRIGHTNESS_TAPER) * (offset + scale * b) - depth * g
}

/// Expected class spectrum (noise and jitter averaged out).
pub fn expected_class_mean(cfg: &SynthConfig, label: Label, wl: f64) -> f64 {
    leaf_curve(cfg, wl, class_depth(cfg, label), cfg.leaf_offset_max / 2.0, 0.0)
}

impl SynthConfig {
    pub fn n_non_infected(&self) -> usize {
        self.n_non_infected_plants.unwrap_or(self.n_plants_per_class)
    }

    pub fn stage(&self) -> f64 {
        self.stage_gdd.unwrap_or_else(|| self.preset.default_gdd())
    }

    /// Checks parameters and that every noise-free leaf stays in (0, 1).
    pub fn validate(&self, grid: &WavelengthGrid) -> Result<()> {
        let bad = |m: String| Err(Error::SynthConfig(m));
        if self.n_plants_per_class < 1 || self.n_non_infected() < 1 {
            return bad("need at least one plant per class".into());
        }
        if self.n_plants_per_class * self.leaves_per_plant < 2 || self.n_non_infected() * self.leaves_per_plant < 2 {
            return bad("need at least 2 samples per class".into());
        }
        let nonneg = [
            ("dip_width_nm", self.dip_width_nm),
            ("base_dip_depth", self.base_dip_depth),
            ("effect", self.effect),
            ("noise_sd", self.noise_sd),
            ("junction_artifact_sd", self.junction_artifact_sd),
            ("depth_jitter", self.depth_jitter),
            ("leaf_offset_max", self.leaf_offset_max),
            ("leaf_scale_jitter", self.leaf_scale_jitter),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self.dip_width_nm == 0.0 {
            return bad("dip_width_nm must be positive".into());
        }
        if !self.stage().is_finite() {
            return bad("stage_gdd must be finite".into());
        }
        // extremes of every jitter term
        let depths = [
            class_depth(self, Label::Infected),
            class_depth(self, Label::NonInfected),
        ];
        for &wl in grid.as_slice() {
            for d in depths {
                for dj in [-self.depth_jitter, self.depth_jitter] {
                    for o in [0.0, self.leaf_offset_max] {
                        for s in [-self.leaf_scale_jitter, self.leaf_scale_jitter] {
                            let r = leaf_curve(self, wl, d + dj, o, s);
                            if !(r > 0.0 && r < 1.0) {
                                return bad(format!(
                                    "noise-free reflectance {r:.4} at {wl} nm leaves (0, 1)"
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Plant `p` alternates labels while both classes remain, infected second.
fn plant_labels(cfg: &SynthConfig) -> Vec<Label> {
    let (mut inf, mut non) = (cfg.n_plants_per_class, cfg.n_non_infected());
    let mut out = Vec::with_capacity(inf + non);
    while inf + non > 0 {
        if non > 0 && (out.len() % 2 == 0 || inf == 0) {
            out.push(Label::NonInfected);
            non -= 1;
        } else {
            out.push(Label::Infected);
            inf -= 1;
        }
    }
    out
}

/// Generates leaves on the layout's native grid, ordered by plant then leaf.
pub fn generate(cfg: &SynthConfig) -> Result<SpectralDataset> {
    let grid = cfg.layout.native_grid()?;
    cfg.validate(&grid)?;
    let w = grid.as_slice();
    let near_junction: Vec<bool> = {
        let mut flag = vec![false; w.len()];
        for j in cfg.layout.junctions() {
            let split = w.partition_point(|&x| x <= j + 1e-9);
            for f in &mut flag[split.saturating_sub(ARTIFACT_BANDS)..(split + ARTIFACT_BANDS).min(w.len())] {
                *f = true;
            }
        }
        flag
    };
    let labels = plant_labels(cfg);
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::SynthConfig(e.to_string()))?;
    let artifact = Normal::new(0.0, cfg.junction_artifact_sd).map_err(|e| Error::SynthConfig(e.to_string()))?;
    let plants: Vec<Vec<Vec<f64>>> = labels
        .par_iter()
        .enumerate()
        .map(|(p, &label)| {
            let mut rng = rng_from(derive_seed(cfg.seed, p as u64));
            let depth = class_depth(cfg, label) + cfg.depth_jitter * rng.random_range(-1.0..=1.0);
            (0..cfg.leaves_per_plant)
                .map(|_| {
                    let offset = cfg.leaf_offset_max * rng.random::<f64>();
                    let scale = cfg.leaf_scale_jitter * rng.random_range(-1.0..=1.0);
                    w.iter()
                        .zip(&near_junction)
                        .map(|(&wl, &nj)| {
                            let mut r = leaf_curve(cfg, wl, depth, offset, scale) + noise.sample(&mut rng);
                            if nj {
                                r += artifact.sample(&mut rng);
                            }
                            r.clamp(0.0, 1.5)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut samples = Vec::new();
    let mut sample_labels = Vec::new();
    let mut sample_ids = Vec::new();
    let mut plant_ids = Vec::new();
    for (p, leaves) in plants.into_iter().enumerate() {
        for (l, row) in leaves.into_iter().enumerate() {
            sample_ids.push(format!("P{p:03}-L{}", l + 1));
            plant_ids.push(format!("P{p:03}"));
            sample_labels.push(labels[p]);
            samples.push(row);
        }
    }
    let n = samples.len();
    SpectralDataset::new(grid, samples, sample_labels, sample_ids, plant_ids, vec![cfg.stage(); n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_196_balanced_samples() {
        let ds = generate(&SynthConfig::default()).unwrap();
        assert_eq!(ds.n_samples(), 196);
        assert_eq!(ds.count(Label::Infected), 98);
        assert_eq!(ds.count(Label::NonInfected), 98);
        assert!(ds.stage_gdd.iter().all(|&g| g == 585.0));
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SynthConfig {
            n_plants_per_class: 4,
            seed: 11,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap().samples, generate(&other).unwrap().samples);
    }

    #[test]
    fn no_effect_and_no_variation_gives_identical_classes() {
        let cfg = SynthConfig {
            n_plants_per_class: 3,
            effect: 0.0,
            noise_sd: 0.0,
            junction_artifact_sd: 0.0,
            depth_jitter: 0.0,
            leaf_offset_max: 0.0,
            leaf_scale_jitter: 0.0,
            ..Default::default()
        };
        let ds = generate(&cfg).unwrap();
        for row in &ds.samples {
            assert_eq!(row, &ds.samples[0]);
        }
    }

    #[test]
    fn class_means_differ_only_inside_dips() {
        for preset in [StagePreset::Early, StagePreset::Late] {
            let cfg = SynthConfig { preset, ..Default::default() };
            let grid = cfg.layout.native_grid().unwrap();
            for &wl in grid.as_slice() {
                let diff = expected_class_mean(&cfg, Label::NonInfected, wl)
                    - expected_class_mean(&cfg, Label::Infected, wl);
                let far = cfg
                    .dip_centers_nm
                    .iter()
                    .all(|c| (wl - c).abs() > 4.0 * cfg.dip_width_nm);
                if far {
                    assert!(diff.abs() < 1e-6, "{wl}");
                }
            }
            let at = |c: f64| {
                expected_class_mean(&cfg, Label::NonInfected, c) - expected_class_mean(&cfg, Label::Infected, c)
            };
            // early: infected shallower, so brighter at the dip
            let s = -preset.sign();
            assert!(s * at(1450.0) > 0.0 && s * at(1940.0) > 0.0);
        }
    }

    #[test]
    fn grid_matches_layout_bandwidths() {
        let ds = generate(&SynthConfig {
            n_plants_per_class: 1,
            ..Default::default()
        })
        .unwrap();
        let w = ds.grid.as_slice();
        for (i, pair) in w.windows(2).enumerate() {
            let step = pair[1] - pair[0];
            if [1000.0, 1890.0].iter().any(|&j| pair[0] <= j && pair[1] > j) {
                continue;
            }
            let want = if pair[1] <= 1000.0 {
                1.5
            } else if pair[1] <= 1890.0 {
                3.8
            } else {
                2.5
            };
            assert!((step - want).abs() < 1e-3, "band {i}: step {step}");
        }
    }

    #[test]
    fn effect_size_cases() {
        let mut cfg = SynthConfig::default();
        assert_eq!(effect_size(&cfg).value, Some(5.0));
        cfg.noise_sd = 0.005;
        assert_eq!(effect_size(&cfg).value, Some(10.0));
        cfg.effect = 0.0;
        assert_eq!(effect_size(&cfg).value, Some(0.0));
        cfg.effect = 0.05;
        cfg.noise_sd = 0.0;
        assert!(effect_size(&cfg).infinite);
    }

    #[test]
    fn out_of_range_parameters_are_rejected() {
        let cfg = SynthConfig {
            base_dip_depth: 0.6,
            ..Default::default()
        };
        assert!(matches!(generate(&cfg), Err(Error::SynthConfig(_))));
        let cfg = SynthConfig {
            n_plants_per_class: 0,
            ..Default::default()
        };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn baseline_anchor_values() {
        assert_eq!(baseline_curve(400.0), 0.08);
        assert!((baseline_curve(550.0) - 0.15).abs() < 1e-12);
        assert!((baseline_curve(670.0) - 0.05).abs() < 1e-12);
        assert!((baseline_curve(760.0) - 0.50).abs() < 1e-12);
        assert_eq!(baseline_curve(1000.0), 0.50);
        assert!((baseline_curve(2500.0) - 0.15).abs() < 1e-12);
        assert_eq!(dip_shape(1450.0, 1450.0, 40.0), 1.0);
        assert_eq!(dip_shape(1610.0, 1450.0, 40.0), 0.0);
    }
}
