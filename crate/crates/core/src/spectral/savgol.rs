//! Savitzky-Golay smoothing.
//!
//! Weights come from an orthonormal polynomial basis on the window
//! (modified Gram-Schmidt on the Vandermonde columns); the hat matrix
//! `Q Qᵀ` gives the fitted value at every window position. The centre row
//! is the classic convolution kernel; the other rows evaluate the same
//! least-squares polynomial off-centre and are used for the first and last
//! `window / 2` points.

use rayon::prelude::*;

use super::types::{PreprocessConfig, SpectralDataset, Spectrum};
use crate::error::{invalid, Error, Result};

const UNIFORM_TOL: f64 = 1e-6;

/// Hat-matrix rows: `rows[t][j]` is the weight of window sample `j` in the
/// fitted value at window position `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SavgolWeights {
    pub window: usize,
    pub order: usize,
    pub rows: Vec<Vec<f64>>,
}

impl SavgolWeights {
    pub fn central(&self) -> &[f64] {
        &self.rows[self.window / 2]
    }
}

pub fn savgol_weights(window: usize, order: usize) -> Result<SavgolWeights> {
    if window % 2 == 0 || window <= order {
        return Err(invalid(format!(
            "window {window} must be odd and greater than order {order}"
        )));
    }
    let half = window / 2;
    let scale = half.max(1) as f64;
    let cols = order + 1;
    // q[c][j]: column c of the basis evaluated at window sample j
    let mut q: Vec<Vec<f64>> = (0..cols)
        .map(|c| {
            (0..window)
                .map(|j| ((j as f64 - half as f64) / scale).powi(c as i32))
                .collect()
        })
        .collect();
    for c in 0..cols {
        // two sweeps of modified Gram-Schmidt
        for _ in 0..2 {
            for p in 0..c {
                let proj: f64 = (0..window).map(|j| q[c][j] * q[p][j]).sum();
                for j in 0..window {
                    q[c][j] -= proj * q[p][j];
                }
            }
        }
        let norm = q[c].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut q[c] {
            *v /= norm;
        }
    }
    let rows = (0..window)
        .map(|t| {
            (0..window)
                .map(|j| (0..cols).map(|c| q[c][t] * q[c][j]).sum())
                .collect()
        })
        .collect();
    Ok(SavgolWeights {
        window,
        order,
        rows,
    })
}

/// Smooths a uniformly sampled sequence. Edge points use the polynomial
/// fitted on the nearest full window.
pub fn savgol_smooth_values(values: &[f64], w: &SavgolWeights) -> Result<Vec<f64>> {
    let n = values.len();
    let win = w.window;
    if win > n {
        return Err(invalid(format!("window {win} exceeds band count {n}")));
    }
    let half = win / 2;
    let apply = |start: usize, row: &[f64]| -> f64 {
        row.iter()
            .zip(&values[start..start + win])
            .map(|(a, b)| a * b)
            .sum()
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i < half {
            apply(0, &w.rows[i])
        } else if i + half >= n {
            let start = n - win;
            apply(start, &w.rows[i - start])
        } else {
            apply(i - half, w.central())
        };
        out.push(v);
    }
    Ok(out)
}

pub(crate) fn check_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Ok(());
    }
    let step = grid[1] - grid[0];
    for p in grid.windows(2) {
        if ((p[1] - p[0]) - step).abs() > UNIFORM_TOL * step.abs().max(1.0) {
            return Err(Error::Grid("smoothing requires a uniform grid".into()));
        }
    }
    Ok(())
}

pub fn savgol_smooth(s: &Spectrum, cfg: &PreprocessConfig) -> Result<Spectrum> {
    check_uniform(s.grid.as_slice())?;
    let w = savgol_weights(cfg.sg_window, cfg.sg_order)?;
    Ok(Spectrum {
        grid: s.grid.clone(),
        reflectance: savgol_smooth_values(&s.reflectance, &w)?,
    })
}

pub(crate) fn savgol_dataset(ds: &SpectralDataset, cfg: &PreprocessConfig) -> Result<SpectralDataset> {
    check_uniform(ds.grid.as_slice())?;
    let w = savgol_weights(cfg.sg_window, cfg.sg_order)?;
    let rows = ds
        .samples
        .par_iter()
        .map(|r| savgol_smooth_values(r, &w))
        .collect::<Result<Vec<_>>>()?;
    Ok(ds.with_rows(ds.grid.clone(), rows))
}
