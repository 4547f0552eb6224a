//! Leaf spectral reflectance classification.
//!
//! The crate covers the whole path from raw spectroradiometer output to a
//! stacked classifier:
//!
//! * [`spectral`]: detector-edge trimming, 1 nm resampling, Savitzky-Golay
//!   smoothing, correlation-driven band merging, scaling, class balancing and
//!   relative mean difference diagnostics.
//! * [`phenology`]: growing degree day accumulation and growth stage lookup.
//! * [`learners`]: seven base learner families written from scratch behind a
//!   single `fit` / `predict_proba` surface.
//! * [`ensemble`]: stratified splits, out-of-fold prediction matrices,
//!   diversity-aware model selection and logistic-regression stacking.
//! * [`evaluation`]: confusion matrices, derived metrics and permutation
//!   importance.
//! * [`synthgen`]: a seeded synthetic leaf spectra generator used as ground
//!   truth for tests and benchmarks.
//! * [`cli`]: the `leafstack` command line front end.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod learners;
pub mod linalg;
pub mod phenology;
pub mod seed;
pub mod spectral;
pub mod synthgen;

pub use error::{Error, Result};
