//! Command-line front end: `synth | preprocess | gdd | rmd | train | evaluate | importance`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::ensemble::{train_ensemble, DataSplit, StackedEnsemble, TrainConfig};
use crate::evaluation::{evaluate, permutation_importance, ConfusionMatrix, ImportanceProfile};
use crate::io::{
    read_json, read_spectra_csv, read_temperature_csv, to_json_bytes, write_atomic, write_json,
    write_spectra_csv,
};
use crate::phenology::{compute_gdd, stage_of, GddConfig, Stage, StageTable};
use crate::seed::derive_seed;
use crate::spectral::{
    balance_dataset, relative_mean_difference, smooth_stage, BalanceMode, ClassMeanProfile,
    FittedPreprocess, SpectralDataset,
};
use crate::synthgen::{generate, StagePreset, SynthConfig};

/// Every tunable of a batch run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; `--seed` overrides it.
    pub seed: u64,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub gdd: GddConfig,
    /// Growth stage thresholds; `None` uses the processing-tomato table.
    pub stages: Option<Vec<Stage>>,
    pub balance: BalanceMode,
    pub threshold: f64,
    pub importance_repeats: usize,
    /// Fallbacks for `--in` and `--out`.
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            synth: SynthConfig::default(),
            train: TrainConfig::default(),
            gdd: GddConfig::default(),
            stages: None,
            balance: BalanceMode::default(),
            threshold: 0.5,
            importance_repeats: 10,
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    /// Parses JSON, naming the offending key on schema errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow!("config key `{path}`: {}", e.inner())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("config {}", path.display()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "leafstack", version, about = "Hyperspectral leaf classification with a stacked ensemble")]
pub struct Cli {
    /// Worker threads; results do not depend on it. Defaults to all cores.
    #[arg(long, global = true, env = "SPECTRA_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Growth stage (GDD) to keep from a multi-stage input.
    #[arg(long)]
    pub stage: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Early,
    Late,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic spectra as CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Output spectra CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stage preset (overrides the config).
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        /// Class effect on dip depth (overrides the config).
        #[arg(long)]
        effect: Option<f64>,
    },
    /// Smooth and merge bands; write the band-group map as JSON.
    Preprocess {
        #[command(flatten)]
        common: Common,
        /// Input spectra CSV.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Output band-map JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Balance classes first and write the balanced spectra here.
        #[arg(long)]
        balanced_out: Option<PathBuf>,
    },
    /// Accumulate growing degree days from a temperature CSV.
    Gdd {
        /// JSON run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Input temperature CSV (`date,t_min,t_max[,t_mean]`).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Output JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-band class means and relative mean difference as CSV.
    Rmd {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Output CSV `wavelength_nm,mu_non,mu_inf,rmd`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the native bands instead of the smoothed analysis grid.
        #[arg(long)]
        raw: bool,
    },
    /// Train the stacked ensemble; writes model.json, selection.json, split.json.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a trained model on its test and validation splits.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Trained model JSON.
        #[arg(long)]
        model: PathBuf,
        /// Split JSON; defaults to split.json beside the model.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Output directory for metrics.json and metrics_validation.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Decision threshold on the infected probability.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Permutation importance of merged bands on the validation split.
    Importance {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Split JSON; defaults to split.json beside the model.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Output CSV `representative_nm,importance_mean,importance_sd`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Shuffles per band.
        #[arg(long)]
        repeats: Option<usize>,
        /// Also write one profile per base model into this directory.
        #[arg(long)]
        per_model_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize)]
struct GddReport {
    gdd: f64,
    stage: String,
    t_base: f64,
    n_days: usize,
}

#[derive(Debug, Serialize)]
struct MetricsFile {
    stage_gdd: f64,
    split: &'static str,
    confusion: ConfusionMatrix,
    accuracy: Option<f64>,
    recall_infected: Option<f64>,
    specificity: Option<f64>,
    precision: Option<f64>,
    f1: Option<f64>,
    auc: Option<f64>,
    threshold: f64,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| anyhow!("missing {what}"))
}

fn existing(path: PathBuf) -> Result<PathBuf> {
    if !path.is_file() {
        bail!("input not found: {}", path.display());
    }
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn select_stage(ds: SpectralDataset, stage: Option<f64>) -> Result<SpectralDataset> {
    let Some(stage) = stage else { return Ok(ds) };
    let idx: Vec<usize> = (0..ds.n_samples()).filter(|&i| ds.stage_gdd[i] == stage).collect();
    if idx.is_empty() {
        bail!("no rows at stage {stage} GDD");
    }
    Ok(ds.subset(&idx))
}

fn load_spectra(input: Option<PathBuf>, cfg: &RunConfig, stage: Option<f64>) -> Result<SpectralDataset> {
    let path = existing(required(input, &cfg.input, "--in")?)?;
    let ds = read_spectra_csv(&path).with_context(|| path.display().to_string())?;
    select_stage(ds, stage)
}

/// Model, split and the rows they refer to.
fn load_trained(
    common: &Common,
    input: Option<PathBuf>,
    model: &Path,
    split: Option<PathBuf>,
    cfg: &RunConfig,
) -> Result<(StackedEnsemble, DataSplit, SpectralDataset)> {
    let model = existing(model.to_path_buf())?;
    let split = existing(split.unwrap_or_else(|| model.with_file_name("split.json")))?;
    let input = existing(required(input, &cfg.input, "--in")?)?;
    let ens: StackedEnsemble = read_json(&model)?;
    let split: DataSplit = read_json(&split)?;
    if let Some(s) = common.stage {
        if s != ens.stage_gdd {
            bail!("--stage {s} does not match the model's stage {}", ens.stage_gdd);
        }
    }
    let ds = read_spectra_csv(&input).with_context(|| input.display().to_string())?;
    let ds = select_stage(ds, Some(ens.stage_gdd))?;
    let n = split.train.len() + split.validation.len() + split.test.len();
    if n != ds.n_samples() {
        bail!(
            "split covers {n} rows but the input has {} at stage {}",
            ds.n_samples(),
            ens.stage_gdd
        );
    }
    Ok((ens, split, ds))
}

fn metrics_file(ens: &StackedEnsemble, ds: &SpectralDataset, rows: &[usize], name: &'static str, threshold: f64) -> Result<MetricsFile> {
    let part = ds.subset(rows);
    let preds = ens.predict(&part)?;
    let m = evaluate(&preds, &part.label_bits(), threshold)?;
    Ok(MetricsFile {
        stage_gdd: ens.stage_gdd,
        split: name,
        confusion: m.confusion,
        accuracy: m.accuracy,
        recall_infected: m.recall_infected,
        specificity: m.specificity,
        precision: m.precision,
        f1: m.f1,
        auc: m.auc,
        threshold: m.threshold,
    })
}

fn importance_csv(profile: &ImportanceProfile) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["representative_nm", "importance_mean", "importance_sd"])?;
    for e in &profile.entries {
        w.write_record([
            e.representative_nm.to_string(),
            e.importance_mean.to_string(),
            e.importance_sd.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Runs the parsed command inside a pool sized by `--threads`.
pub fn run(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            common,
            out,
            preset,
            effect,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let out = required(out, &cfg.output, "--out")?;
            let mut synth = cfg.synth;
            if let Some(s) = common.seed {
                synth.seed = s;
            }
            if let Some(p) = preset {
                synth.preset = match p {
                    PresetArg::Early => StagePreset::Early,
                    PresetArg::Late => StagePreset::Late,
                };
            }
            if let Some(e) = effect {
                synth.effect = e;
            }
            if let Some(g) = common.stage {
                synth.stage_gdd = Some(g);
            }
            let ds = generate(&synth)?;
            write_spectra_csv(&out, &ds)?;
        }
        Command::Preprocess {
            common,
            input,
            out,
            balanced_out,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let out = required(out, &cfg.output, "--out")?;
            let mut ds = load_spectra(input, &cfg, common.stage)?;
            if let Some(path) = balanced_out {
                ds = balance_dataset(&ds, cfg.balance, common.seed.unwrap_or(cfg.seed))?;
                write_spectra_csv(&path, &ds)?;
            }
            let all: Vec<usize> = (0..ds.n_samples()).collect();
            let (fitted, _) = FittedPreprocess::fit(&ds, &all, &cfg.train.layout, &cfg.train.preprocess)?;
            write_json(&out, &fitted.band_group_map)?;
        }
        Command::Gdd { config, input, out } => {
            let cfg = load_config(config.as_deref())?;
            let path = existing(required(input, &cfg.input, "--in")?)?;
            let records = read_temperature_csv(&path).with_context(|| path.display().to_string())?;
            let gdd = compute_gdd(&records, &cfg.gdd)?;
            let table = match cfg.stages {
                Some(s) => StageTable::new(s)?,
                None => StageTable::default(),
            };
            let report = GddReport {
                gdd,
                stage: stage_of(gdd, &table).to_string(),
                t_base: cfg.gdd.t_base,
                n_days: records.len(),
            };
            match out.or(cfg.output) {
                Some(p) => write_json(&p, &report)?,
                None => print!("{}", String::from_utf8(to_json_bytes(&report)?)?),
            }
        }
        Command::Rmd {
            common,
            input,
            out,
            raw,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let out = required(out, &cfg.output, "--out")?;
            let ds = load_spectra(input, &cfg, common.stage)?;
            let ds = if raw {
                ds
            } else {
                let sm = smooth_stage(&ds, &cfg.train.layout, &cfg.train.preprocess)?;
                warn_all(&sm.warnings);
                sm.dataset
            };
            let profile = ClassMeanProfile::from_dataset(&ds)?;
            let rmd = relative_mean_difference(&profile)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["wavelength_nm", "mu_non", "mu_inf", "rmd"])?;
            for (i, r) in rmd.iter().enumerate() {
                w.write_record([
                    profile.wavelengths_nm[i].to_string(),
                    profile.mean_non_infected[i].to_string(),
                    profile.mean_infected[i].to_string(),
                    r.to_string(),
                ])?;
            }
            write_atomic(&out, &w.into_inner()?)?;
        }
        Command::Train { common, input, out } => {
            let cfg = load_config(common.config.as_deref())?;
            let out = required(out, &cfg.output, "--out")?;
            let ds = load_spectra(input, &cfg, common.stage)?;
            let outcome = train_ensemble(&ds, &cfg.train, common.seed.unwrap_or(cfg.seed))?;
            warn_all(&outcome.warnings);
            ensure_dir(&out)?;
            write_json(&out.join("model.json"), &outcome.ensemble)?;
            write_json(&out.join("selection.json"), &outcome.report)?;
            write_json(&out.join("split.json"), &outcome.split)?;
        }
        Command::Evaluate {
            common,
            input,
            model,
            split,
            out,
            threshold,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let out = required(out, &cfg.output, "--out")?;
            let threshold = threshold.unwrap_or(cfg.threshold);
            let (ens, split, ds) = load_trained(&common, input, &model, split, &cfg)?;
            let test = metrics_file(&ens, &ds, &split.test, "test", threshold)?;
            let val = metrics_file(&ens, &ds, &split.validation, "validation", threshold)?;
            ensure_dir(&out)?;
            write_json(&out.join("metrics.json"), &test)?;
            write_json(&out.join("metrics_validation.json"), &val)?;
        }
        Command::Importance {
            common,
            input,
            model,
            split,
            out,
            repeats,
            per_model_dir,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let out = required(out, &cfg.output, "--out")?;
            let repeats = repeats.unwrap_or(cfg.importance_repeats);
            let seed = derive_seed(common.seed.unwrap_or(cfg.seed), 3);
            let (ens, split, ds) = load_trained(&common, input, &model, split, &cfg)?;
            let val = ds.subset(&split.validation);
            let features = ens.features(&val)?;
            let labels = val.label_bits();
            let wl: Vec<f64> = ens
                .band_group_map
                .groups
                .iter()
                .map(|g| g.representative_nm)
                .collect();
            let profile = permutation_importance(|x| ens.predict_features(x), &features, &labels, &wl, repeats, seed)?;
            write_atomic(&out, &importance_csv(&profile)?)?;
            if let Some(dir) = per_model_dir {
                ensure_dir(&dir)?;
                for base in &ens.model.base_models {
                    let p = permutation_importance(|x| base.predict_proba(x), &features, &labels, &wl, repeats, seed)?;
                    write_atomic(&dir.join(format!("importance_{}.csv", base.name())), &importance_csv(&p)?)?;
                }
            }
        }
    }
    Ok(())
}
