//! Small least-squares helpers: ordinary linear regression and a
//! Levenberg–Marquardt loop with a forward-difference Jacobian.

use alloc::vec;
use alloc::vec::Vec;

/// Slope, intercept and r² of `y = intercept + slope·x`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { (1.0f64 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// Solve `A x = b` for a small symmetric positive system by Gaussian
/// elimination with partial pivoting. Returns `None` if singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub(crate) struct Fitted {
    pub params: Vec<f64>,
    pub cost: f64,
}

/// Minimise `Σ (y_i - f(x_i; θ))²` starting from `start`.
///
/// `clamp` is applied to every trial parameter vector to keep it inside the
/// model's domain.
pub(crate) fn levenberg_marquardt<F, C>(
    x: &[f64],
    y: &[f64],
    start: &[f64],
    model: F,
    clamp: C,
    max_iter: usize,
) -> Fitted
where
    F: Fn(&[f64], f64) -> f64,
    C: Fn(&mut [f64]),
{
    let m = start.len();
    let cost_of = |theta: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let r = yi - model(theta, xi);
                r * r
            })
            .sum()
    };
    let mut theta = start.to_vec();
    clamp(&mut theta);
    let mut cost = cost_of(&theta);
    let mut mu = 1e-3;
    let mut jac = vec![0.0; x.len() * m];
    for _ in 0..max_iter {
        let base: Vec<f64> = x.iter().map(|&xi| model(&theta, xi)).collect();
        for j in 0..m {
            let step = 1e-7 * theta[j].abs().max(1e-6);
            let mut shifted = theta.clone();
            shifted[j] += step;
            for (i, &xi) in x.iter().enumerate() {
                jac[i * m + j] = (model(&shifted, xi) - base[i]) / step;
            }
        }
        let mut jtj = vec![vec![0.0; m]; m];
        let mut jtr = vec![0.0; m];
        for i in 0..x.len() {
            let r = y[i] - base[i];
            let row = &jac[i * m..(i + 1) * m];
            for a in 0..m {
                jtr[a] += row[a] * r;
                for b in a..m {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut damped = jtj.clone();
            for a in 0..m {
                damped[a][a] += mu * jtj[a][a].max(1e-300);
            }
            let Some(delta) = solve(damped, jtr.clone()) else {
                mu *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + d).collect();
            clamp(&mut trial);
            let trial_cost = cost_of(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let gain = (cost - trial_cost) / cost.max(1e-300);
                theta = trial;
                cost = trial_cost;
                mu = (mu * 0.3).max(1e-12);
                improved = true;
                if gain < 1e-12 {
                    return Fitted { params: theta, cost };
                }
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Fitted { params: theta, cost }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_decay() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| 2.5 * libm::exp(-1.3 * t)).collect();
        let fit = levenberg_marquardt(&x, &y, &[1.0, -0.5], |th, t| th[0] * libm::exp(th[1] * t), |_| {}, 200);
        assert!((fit.params[0] - 2.5).abs() < 1e-6);
        assert!((fit.params[1] + 1.3).abs() < 1e-6);
    }

    #[test]
    fn linear_fit_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let (s, c, r2) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
