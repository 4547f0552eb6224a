use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Pearson coefficient with a flag for zero-variance inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

/// Pearson product-moment correlation. A constant input yields `r = 0`
/// with `degenerate` set.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(invalid(format!(
            "pearson_r length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(invalid("pearson_r needs at least 2 observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("pearson_r input contains non-finite values"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 || is_constant(x) || is_constant(y) {
        return Ok(Correlation {
            r: 0.0,
            degenerate: true,
        });
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        degenerate: false,
    })
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn self_and_negated() {
        let x = [0.3, 1.7, -2.0, 4.4, 0.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson_r(&x, &x).unwrap().r, 1.0);
        assert_eq!(pearson_r(&x, &neg).unwrap().r, -1.0);
    }

    #[test]
    fn hand_computed_value() {
        // x̄ = 2.5, ȳ = 2.75; Σdxdy = 6.5, Σdx² = 5, Σdy² = 8.75
        let r = pearson_r(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).unwrap().r;
        let expect = 6.5 / (5.0f64 * 8.75).sqrt();
        assert!((r - expect).abs() < 1e-15);
        assert!((r - 0.9827).abs() < 5e-5);
    }

    #[test]
    fn constant_input_is_degenerate() {
        let c = pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.r, 0.0);
        assert!(c.degenerate);
    }

    #[test]
    fn bad_lengths() {
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn affine_invariance(
            x in proptest::collection::vec(-10.0f64..10.0, 3..40),
            noise in proptest::collection::vec(-1.0f64..1.0, 40),
            a in 0.1f64..10.0,
            b in -5.0f64..5.0,
        ) {
            let y: Vec<f64> = x.iter().zip(&noise).map(|(u, e)| 0.5 * u + e).collect();
            let base = pearson_r(&x, &y).unwrap();
            prop_assume!(!base.degenerate);
            let pos: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let neg: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
            prop_assert!((pearson_r(&pos, &y).unwrap().r - base.r).abs() < 1e-12);
            prop_assert!((pearson_r(&neg, &y).unwrap().r + base.r).abs() < 1e-12);
        }
    }
}
