//! L2-regularized logistic regression fitted by Newton's method.

/// Fits weights and an unpenalized bias. Returns `(weights, bias)`.
#[allow(clippy::needless_range_loop)]
pub fn fit_logistic(x: &[Vec<f64>], y: &[f64], l2: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let d = x.first().map_or(0, Vec::len);
    // parameter layout: [w_0 .. w_{d-1}, b]
    let mut theta = vec![0.0; d + 1];
    for _ in 0..max_iter {
        let mut grad = vec![0.0; d + 1];
        let mut hess = vec![vec![0.0; d + 1]; d + 1];
        for (row, &label) in x.iter().zip(y) {
            let z = row.iter().zip(&theta).map(|(a, w)| a * w).sum::<f64>() + theta[d];
            let p = super::boosting::sigmoid(z);
            let r = p - label;
            let w = p * (1.0 - p);
            for i in 0..=d {
                let xi = if i < d { row[i] } else { 1.0 };
                grad[i] += r * xi;
                for j in 0..=i {
                    let xj = if j < d { row[j] } else { 1.0 };
                    hess[i][j] += w * xi * xj;
                }
            }
        }
        for i in 0..d {
            grad[i] += l2 * theta[i];
            hess[i][i] += l2;
        }
        // keeps the system positive definite when a class is separable
        hess[d][d] += 1e-9;
        for i in 0..=d {
            for j in 0..i {
                hess[j][i] = hess[i][j];
            }
        }
        let Some(step) = cholesky_solve(&hess, &grad) else {
            break;
        };
        let mut max_step: f64 = 0.0;
        for (t, s) in theta.iter_mut().zip(&step) {
            *t -= s;
            max_step = max_step.max(s.abs());
        }
        if max_step < 1e-10 {
            break;
        }
    }
    let bias = theta.pop().unwrap_or(0.0);
    (theta, bias)
}

/// Solves `a * x = b` for symmetric positive-definite `a`.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if v <= 0.0 || !v.is_finite() {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    Some(x)
}
