//! Small dense linear algebra used by the Newton solvers.

/// Row-major square matrix solve via Cholesky factorization.
///
/// Returns `None` when the matrix is not numerically positive definite.
pub fn cholesky_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // forward: L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // backward: L^T x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// Solve with increasing diagonal jitter until the factorization succeeds.
pub fn solve_spd_jittered(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    if let Some(x) = cholesky_solve(a, n, b) {
        return Some(x);
    }
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0_f64, f64::max).max(1.0);
    let mut jitter = 1e-12 * scale;
    let mut work = a.to_vec();
    for _ in 0..12 {
        for i in 0..n {
            work[i * n + i] = a[i * n + i] + jitter;
        }
        if let Some(x) = cholesky_solve(&work, n, b) {
            return Some(x);
        }
        jitter *= 10.0;
    }
    None
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
