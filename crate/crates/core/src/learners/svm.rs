//! RBF support vector machine: SMO on the dual, Platt-scaled outputs.

use serde::{Deserialize, Serialize};

use super::{require_both_classes, LabeledDataset};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub c: f64,
    /// `None` means `1 / d`.
    pub gamma: Option<f64>,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// `None` means `max(10_000_000, 100 n)` working-set updates.
    pub max_iter: Option<usize>,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: None,
        }
    }
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub b: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Solves `min ½ αᵀQα − Σα` s.t. `0 ≤ α ≤ c`, `yᵀα = 0`, with
/// `Q_ij = y_i y_j K_ij` and `y ∈ {−1, +1}`.
///
/// Working pairs are the maximal violating pair; the decision function is
/// `f(x) = Σ α_i y_i K(x_i, x) + b`.
pub fn smo_solve(kernel: &[Vec<f64>], y: &[f64], c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    const TAU: f64 = 1e-12;
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let mut iterations = 0;
    let mut converged = false;
    let (mut m, mut big_m) = (f64::NEG_INFINITY, f64::INFINITY);
    while iterations < max_iter {
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        m = f64::NEG_INFINITY;
        big_m = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > m {
                m = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m - big_m < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (ai, aj) = (alpha[i], alpha[j]);
        let k = &kernel;
        if y[i] != y[j] {
            let quad = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            let (mut ni, mut nj) = (ai + delta, aj + delta);
            if diff > 0.0 {
                if nj < 0.0 {
                    nj = 0.0;
                    ni = diff;
                }
            } else if ni < 0.0 {
                ni = 0.0;
                nj = -diff;
            }
            if diff > 0.0 {
                if ni > c {
                    ni = c;
                    nj = c - diff;
                }
            } else if nj > c {
                nj = c;
                ni = c + diff;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        } else {
            let quad = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            let (mut ni, mut nj) = (ai - delta, aj + delta);
            if sum > c {
                if ni > c {
                    ni = c;
                    nj = sum - c;
                }
            } else if nj < 0.0 {
                nj = 0.0;
                ni = sum;
            }
            if sum > c {
                if nj > c {
                    nj = c;
                    ni = sum - c;
                }
            } else if ni < 0.0 {
                ni = 0.0;
                nj = sum;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[t][i] * di + y[j] * k[t][j] * dj);
        }
    }
    // offset: mean over free vectors, else the middle of the feasible interval
    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .map(|t| -y[t] * grad[t])
        .collect();
    let b = if !free.is_empty() {
        free.iter().sum::<f64>() / free.len() as f64
    } else if m.is_finite() && big_m.is_finite() {
        (m + big_m) / 2.0
    } else {
        0.0
    };
    SmoSolution {
        alpha,
        b,
        converged,
        iterations,
    }
}

/// `P(infected | f) = 1 / (1 + exp(a·f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn prob(&self, f: f64) -> f64 {
        super::sigmoid(-(self.a * f + self.b))
    }
}

/// Newton fit with backtracking on smoothed targets.
pub fn platt_fit(dec: &[f64], labels: &[u8]) -> Platt {
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let t: Vec<f64> = labels.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = f * a + b;
                if z >= 0.0 {
                    ti * z + (-z).exp().ln_1p()
                } else {
                    (ti - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let (mut a, mut b) = (0.0, ((n_neg + 1.0) / (n_pos + 1.0)).ln());
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    Platt { a, b }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub b: f64,
    pub platt: Platt,
    pub converged: bool,
    pub iterations: usize,
}

impl Svm {
    pub fn fit(params: &SvmParams, data: &LabeledDataset) -> Result<Self> {
        require_both_classes(data, "svm_rbf")?;
        let n = data.n();
        let gamma = params.gamma.unwrap_or(1.0 / data.dim() as f64);
        let x = &data.features;
        let kernel: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| rbf_kernel(&x[i], &x[j], gamma)).collect())
            .collect();
        let y: Vec<f64> = data.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let max_iter = params.max_iter.unwrap_or(10_000_000usize.max(100 * n));
        let sol = smo_solve(&kernel, &y, params.c, params.tol, max_iter);
        let dec: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| sol.alpha[j] * y[j] * kernel[i][j]).sum::<f64>() + sol.b)
            .collect();
        let platt = platt_fit(&dec, &data.labels);
        let sv: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
        Ok(Self {
            gamma,
            support_vectors: sv.iter().map(|&i| x[i].clone()).collect(),
            dual_coef: sv.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
            b: sol.b,
            platt,
            converged: sol.converged,
            iterations: sol.iterations,
        })
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(s, &c)| c * rbf_kernel(s, x, self.gamma))
            .sum::<f64>()
            + self.b
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.platt.prob(self.decision_value(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair_is_undecided_at_the_midpoint() {
        let d = LabeledDataset::new(vec![vec![-1.0], vec![1.0]], vec![0, 1]).unwrap();
        let m = Svm::fit(&SvmParams::default(), &d).unwrap();
        assert!(m.converged);
        assert!(m.decision_value(&[0.0]).abs() < 1e-12);
        assert!((m.predict(&[vec![0.0]])[0] - 0.5).abs() < 1e-9);
        assert!(m.decision_value(&[1.0]) > 0.0 && m.decision_value(&[-1.0]) < 0.0);
    }

    #[test]
    fn vanishing_gamma_gives_constant_prior() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin(), i as f64 / 10.0]).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 4 != 0)).collect();
        let d = LabeledDataset::new(x, y).unwrap();
        let p = SvmParams {
            gamma: Some(1e-12),
            ..Default::default()
        };
        let m = Svm::fit(&p, &d).unwrap();
        let probs = m.predict(&d.features);
        let spread = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - probs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-6, "spread {spread}");
        assert!((probs[0] - 0.75).abs() < 0.01, "{}", probs[0]);
    }

    #[test]
    fn separable_with_large_c_has_correct_margins() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.9).cos() * 2.0, (t * 0.4).sin() * 2.0]
            })
            .collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] + r[1] > 0.2)).collect();
        let d = LabeledDataset::new(x, y).unwrap();
        let p = SvmParams {
            c: 1e4,
            gamma: Some(0.5),
            ..Default::default()
        };
        let m = Svm::fit(&p, &d).unwrap();
        assert!(m.converged);
        for (r, &l) in d.features.iter().zip(&d.labels) {
            let s = if l == 1 { 1.0 } else { -1.0 };
            assert!(s * m.decision_value(r) > 0.0);
        }
    }

    #[test]
    fn flipped_labels_flip_decision_sign() {
        let x: Vec<Vec<f64>> = (0..24).map(|i| vec![(i as f64 * 0.61).sin(), (i as f64 * 0.23).cos()]).collect();
        let y: Vec<u8> = (0..24).map(|i| u8::from((i * 7) % 5 < 2)).collect();
        let yf: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        let a = Svm::fit(&SvmParams::default(), &LabeledDataset::new(x.clone(), y).unwrap()).unwrap();
        let b = Svm::fit(&SvmParams::default(), &LabeledDataset::new(x.clone(), yf).unwrap()).unwrap();
        for r in &x {
            let (fa, fb) = (a.decision_value(r), b.decision_value(r));
            assert!((fa + fb).abs() < 1e-6, "{fa} {fb}");
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let d = LabeledDataset::new(vec![vec![0.0], vec![1.0]], vec![1, 1]).unwrap();
        assert!(Svm::fit(&SvmParams::default(), &d).is_err());
    }
}
