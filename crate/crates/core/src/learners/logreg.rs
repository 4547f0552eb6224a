//! L2-penalized logistic regression fit by damped Newton iterations.
//!
//! Parameter vectors are `[w_1, …, w_d, intercept]`; the intercept is not
//! penalized. The objective is the mean log loss plus `l2/2 · ‖w‖²`.

use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, LabeledDataset};
use crate::error::Result;
use crate::linalg::solve_spd_jittered;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogregParams {
    pub l2: f64,
    pub max_iter: usize,
    /// Gradient-norm stopping threshold.
    pub tol: f64,
}

impl Default for LogregParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 50,
            tol: 1e-8,
        }
    }
}

fn margin(x: &[f64], theta: &[f64]) -> f64 {
    let d = x.len();
    theta[d] + x.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>()
}

pub fn logreg_loss(x: &[Vec<f64>], y: &[u8], l2: f64, theta: &[f64]) -> f64 {
    let n = y.len() as f64;
    let d = theta.len() - 1;
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(r, &t)| {
            let z = margin(r, theta);
            softplus(z) - f64::from(t) * z
        })
        .sum();
    data / n + 0.5 * l2 * theta[..d].iter().map(|w| w * w).sum::<f64>()
}

pub fn logreg_gradient(x: &[Vec<f64>], y: &[u8], l2: f64, theta: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let d = theta.len() - 1;
    let mut g = vec![0.0; d + 1];
    for (r, &t) in x.iter().zip(y) {
        let e = sigmoid(margin(r, theta)) - f64::from(t);
        for (gj, xj) in g.iter_mut().zip(r) {
            *gj += e * xj;
        }
        g[d] += e;
    }
    for j in 0..=d {
        g[j] /= n;
        if j < d {
            g[j] += l2 * theta[j];
        }
    }
    g
}

/// Row-major `(d+1) × (d+1)` Hessian.
pub fn logreg_hessian(x: &[Vec<f64>], y: &[u8], l2: f64, theta: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let m = theta.len();
    let d = m - 1;
    let mut h = vec![0.0; m * m];
    let mut xt = vec![1.0; m];
    for r in x {
        let p = sigmoid(margin(r, theta));
        let w = p * (1.0 - p) / n;
        xt[..d].copy_from_slice(r);
        for a in 0..m {
            for b in 0..m {
                h[a * m + b] += w * xt[a] * xt[b];
            }
        }
    }
    for j in 0..d {
        h[j * m + j] += l2;
    }
    h
}

/// Solves `H Δ = −g`.
pub fn newton_direction(x: &[Vec<f64>], y: &[u8], l2: f64, theta: &[f64]) -> Vec<f64> {
    let m = theta.len();
    let g = logreg_gradient(x, y, l2, theta);
    let h = logreg_hessian(x, y, l2, theta);
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    solve_spd_jittered(&h, m, &neg).unwrap_or(neg)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl LogisticRegression {
    /// Starts from all-zero parameters.
    pub fn fit(params: &LogregParams, data: &LabeledDataset) -> Result<Self> {
        let (x, y, l2) = (&data.features, &data.labels, params.l2);
        let d = data.dim();
        let mut theta = vec![0.0; d + 1];
        let mut loss = logreg_loss(x, y, l2, &theta);
        let mut g = logreg_gradient(x, y, l2, &theta);
        let mut iterations = 0;
        while norm(&g) >= params.tol && iterations < params.max_iter {
            iterations += 1;
            let step = newton_direction(x, y, l2, &theta);
            let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                let cl = logreg_loss(x, y, l2, &cand);
                if cl <= loss + 1e-4 * t * slope {
                    theta = cand;
                    loss = cl;
                    moved = true;
                    break;
                }
                t /= 2.0;
            }
            g = logreg_gradient(x, y, l2, &theta);
            if !moved {
                break;
            }
        }
        let grad_norm = norm(&g);
        Ok(Self {
            intercept: theta[d],
            weights: theta[..d].to_vec(),
            converged: grad_norm < params.tol,
            iterations,
            grad_norm,
        })
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| sigmoid(self.decision_value(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng;

    fn random_problem(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = rng_from(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y = x.iter().map(|r| u8::from(r[0] + rng.random_range(-1.0..1.0) > 0.0)).collect();
        (x, y)
    }

    #[test]
    fn zero_parameters_predict_half() {
        let m = LogisticRegression {
            weights: vec![0.0; 3],
            intercept: 0.0,
            converged: false,
            iterations: 0,
            grad_norm: 0.0,
        };
        assert_eq!(m.predict(&[vec![4.0, -1.0, 9.0]]), vec![0.5]);
    }

    #[test]
    fn symmetric_data_has_zero_intercept() {
        let d = LabeledDataset::new(vec![vec![-1.5], vec![1.5]], vec![0, 1]).unwrap();
        let m = LogisticRegression::fit(&LogregParams::default(), &d).unwrap();
        assert!(m.converged);
        assert!(m.intercept.abs() < 1e-6);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn converges_on_separable_data_with_penalty() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 - 5.5, ((i * 5) % 3) as f64]).collect();
        let y: Vec<u8> = (0..12).map(|i| u8::from(i >= 6)).collect();
        let d = LabeledDataset::new(x.clone(), y.clone()).unwrap();
        let m = LogisticRegression::fit(&LogregParams::default(), &d).unwrap();
        let mut theta = m.weights.clone();
        theta.push(m.intercept);
        assert!(norm(&logreg_gradient(&x, &y, 1e-4, &theta)) < 1e-8);
        // central-difference check of the returned stationarity
        for j in 0..theta.len() {
            let h = 1e-6;
            let mut a = theta.clone();
            let mut b = theta.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (logreg_loss(&x, &y, 1e-4, &a) - logreg_loss(&x, &y, 1e-4, &b)) / (2.0 * h);
            assert!(fd.abs() < 1e-7, "{fd}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for s in 0..10 {
            let (x, y) = random_problem(s, 15, 3);
            let mut rng = rng_from(100 + s);
            let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = logreg_gradient(&x, &y, 0.01, &theta);
            let h = logreg_hessian(&x, &y, 0.01, &theta);
            for j in 0..4 {
                let e = 1e-5;
                let mut a = theta.clone();
                let mut b = theta.clone();
                a[j] += e;
                b[j] -= e;
                let fd = (logreg_loss(&x, &y, 0.01, &a) - logreg_loss(&x, &y, 0.01, &b)) / (2.0 * e);
                assert!((fd - g[j]).abs() <= 1e-4 * g[j].abs().max(1e-3));
                let ga = logreg_gradient(&x, &y, 0.01, &a);
                let gb = logreg_gradient(&x, &y, 0.01, &b);
                for i in 0..4 {
                    let fdh = (ga[i] - gb[i]) / (2.0 * e);
                    assert!((fdh - h[i * 4 + j]).abs() <= 1e-4 * h[i * 4 + j].abs().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn flipped_labels_complement() {
        let (x, y) = random_problem(7, 30, 2);
        let yf = y.iter().map(|v| 1 - v).collect();
        let a = LogisticRegression::fit(&LogregParams::default(), &LabeledDataset::new(x.clone(), y).unwrap()).unwrap();
        let b = LogisticRegression::fit(&LogregParams::default(), &LabeledDataset::new(x.clone(), yf).unwrap()).unwrap();
        for (p, q) in a.predict(&x).iter().zip(b.predict(&x)) {
            assert!((p + q - 1.0).abs() < 1e-6);
        }
    }
}
