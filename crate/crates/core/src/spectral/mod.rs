//! Spectral preprocessing and class-contrast diagnostics.
//!
//! The processing order is fixed: detector-edge trim, uniform resampling,
//! Savitzky-Golay smoothing, correlated-band merging, standard scaling.

mod balance;
mod correlation;
mod merge;
mod pipeline;
mod resample;
mod rmd;
mod savgol;
mod scaler;
mod trim;
mod types;

pub use balance::{balance_dataset, BalanceMode};
pub use correlation::{pearson_r, Correlation};
pub use merge::{merge_correlated_bands, BandGroup, BandGroupMap};
pub use pipeline::{smooth_stage, FittedPreprocess, SmoothedData};
pub use resample::{resample_uniform, ResamplePlan};
pub use rmd::{relative_mean_difference, ClassMeanProfile};
pub use savgol::{savgol_smooth, savgol_smooth_values, savgol_weights, SavgolWeights};
pub use scaler::{apply_scaler, fit_scaler, StandardScaler};
pub use trim::{trim_detector_edges, trim_indices, TrimOutcome};
pub use types::{
    DetectorLayout, DetectorSegment, Label, PreprocessConfig, SpectralDataset, Spectrum,
    WavelengthGrid,
};
