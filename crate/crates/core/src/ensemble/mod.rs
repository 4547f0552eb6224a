//! Split, out-of-fold predictions, diverse-model selection and stacking.

mod oof;
mod select;
mod split;
mod stack;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::learners::{LabeledDataset, LearnerSpec};
use crate::seed::derive_seed;
use crate::spectral::{
    BandGroupMap, DetectorLayout, FittedPreprocess, PreprocessConfig, SpectralDataset, StandardScaler,
    WavelengthGrid,
};

pub use oof::{compute_oof, compute_oof_with_folds, stratified_folds, OofMatrix};
pub use select::{
    auc_score, prediction_correlation, select_models, CorrelationMatrix, Decision, SelectionConfig,
    SelectionReport, TraceEntry,
};
pub use split::{stratified_split, DataSplit, SplitRatios};
pub use stack::{fit_stacked, fit_stacked_from_oof, MetaModel, StackedModel};

/// Everything that shapes a training run besides the data and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub preprocess: PreprocessConfig,
    pub layout: DetectorLayout,
    pub split: SplitRatios,
    pub k_folds: usize,
    pub selection: SelectionConfig,
    /// Candidate learners; `None` means all seven families with defaults.
    pub pool: Option<Vec<LearnerSpec>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            layout: DetectorLayout::default(),
            split: SplitRatios::default(),
            k_folds: 5,
            selection: SelectionConfig::default(),
            pool: None,
        }
    }
}

/// Seeds derived from the master seed, recorded for audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSeeds {
    pub master: u64,
    pub split: u64,
    pub folds: u64,
    pub pool: u64,
}

impl EnsembleSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            master,
            split: derive_seed(master, 0),
            folds: derive_seed(master, 1),
            pool: derive_seed(master, 2),
        }
    }
}

/// The deployable bundle: preprocessing state, refit bases and meta model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedEnsemble {
    pub stage_gdd: f64,
    pub native_grid_nm: WavelengthGrid,
    pub layout: DetectorLayout,
    pub band_group_map: BandGroupMap,
    pub scaler: StandardScaler,
    #[serde(flatten)]
    pub model: StackedModel,
    pub seeds: EnsembleSeeds,
    pub config: TrainConfig,
}

impl StackedEnsemble {
    pub fn preprocess(&self) -> FittedPreprocess {
        FittedPreprocess {
            config: self.config.preprocess.clone(),
            layout: self.layout.clone(),
            native_grid_nm: self.native_grid_nm.clone(),
            band_group_map: self.band_group_map.clone(),
            scaler: self.scaler.clone(),
        }
    }

    /// Scaled model features for native-grid spectra.
    pub fn features(&self, raw: &SpectralDataset) -> Result<Vec<Vec<f64>>> {
        Ok(self.preprocess().transform(raw)?.samples)
    }

    pub fn predict_features(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.model.predict_features(features)
    }

    /// Native-grid spectra → probability of infection per row.
    pub fn predict(&self, raw: &SpectralDataset) -> Result<Vec<f64>> {
        self.predict_features(&self.features(raw)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub ensemble: StackedEnsemble,
    pub split: DataSplit,
    pub oof: OofMatrix,
    pub report: SelectionReport,
    pub warnings: Vec<String>,
}

/// The single GDD value shared by all rows.
pub fn single_stage(ds: &SpectralDataset) -> Result<f64> {
    let first = *ds.stage_gdd.first().ok_or_else(|| invalid("empty dataset"))?;
    if ds.stage_gdd.iter().any(|&g| g != first) {
        return Err(invalid("dataset mixes GDD stages; select one stage first"));
    }
    Ok(first)
}

/// Mean per-fold AUC of each OOF column; folds holding a single class are
/// skipped, and if every fold is skipped the pooled AUC is used.
pub fn oof_auc(oof: &OofMatrix, labels: &[u8]) -> Result<Vec<f64>> {
    (0..oof.model_ids.len())
        .map(|m| {
            let col = oof.column(m);
            let mut per_fold = Vec::new();
            for f in 0..oof.k_folds {
                let idx: Vec<usize> = (0..labels.len()).filter(|&i| oof.folds[i] == f).collect();
                let y: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
                if y.contains(&0) && y.contains(&1) {
                    let s: Vec<f64> = idx.iter().map(|&i| col[i]).collect();
                    per_fold.push(auc_score(&s, &y)?);
                }
            }
            if per_fold.is_empty() {
                auc_score(&col, labels)
            } else {
                Ok(per_fold.iter().sum::<f64>() / per_fold.len() as f64)
            }
        })
        .collect()
}

/// Split → preprocess (fit on train) → OOF → select → stack.
pub fn train_ensemble(ds: &SpectralDataset, cfg: &TrainConfig, master_seed: u64) -> Result<TrainOutcome> {
    let stage_gdd = single_stage(ds)?;
    let seeds = EnsembleSeeds::from_master(master_seed);
    let labels = ds.label_bits();
    let split = stratified_split(&labels, &cfg.split, seeds.split)?;
    let (pre, merged) = FittedPreprocess::fit(ds, &split.train, &cfg.layout, &cfg.preprocess)?;
    let mut warnings = Vec::new();
    let train_rows: Vec<Vec<f64>> = split.train.iter().map(|&i| merged.samples[i].clone()).collect();
    let train = LabeledDataset::new(
        pre.scaler.transform(&train_rows)?,
        split.train.iter().map(|&i| labels[i]).collect(),
    )?;
    let pool = cfg
        .pool
        .clone()
        .unwrap_or_else(|| LearnerSpec::default_pool(seeds.pool));
    let oof = compute_oof(&pool, &train, cfg.k_folds, seeds.folds)?;
    let auc = oof_auc(&oof, &train.labels)?;
    let corr = prediction_correlation(&oof)?;
    let report = select_models(&auc, &corr, &cfg.selection)?;
    let selected: Vec<LearnerSpec> = report
        .selected
        .iter()
        .map(|id| pool.iter().find(|s| s.name() == id).cloned().expect("selected from pool"))
        .collect();
    let model = fit_stacked_from_oof(&selected, &train, &oof)?;
    for b in &model.base_models {
        warnings.extend(b.warnings.iter().map(|w| format!("{}: {w}", b.name())));
    }
    if !model.meta.converged {
        warnings.push("meta logistic regression did not reach its gradient tolerance".into());
    }
    let mut config = cfg.clone();
    config.pool = Some(pool);
    let FittedPreprocess {
        layout,
        native_grid_nm,
        band_group_map,
        scaler,
        ..
    } = pre;
    Ok(TrainOutcome {
        ensemble: StackedEnsemble {
            stage_gdd,
            native_grid_nm,
            layout,
            band_group_map,
            scaler,
            model,
            seeds,
            config,
        },
        split,
        oof,
        report,
        warnings,
    })
}
