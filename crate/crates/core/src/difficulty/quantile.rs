//! Linear quantile regression under the pinball loss.

use serde::{Deserialize, Serialize};

use super::DifficultyError;

const IRLS_ROUNDS: usize = 500;
/// Floor on |residual| in the IRLS weights.
const IRLS_FLOOR: f64 = 1e-8;
/// Relative pivot below which the design is treated as rank deficient.
const PIVOT_TOLERANCE: f64 = 1e-10;

pub fn pinball(residual: f64, tau: f64) -> f64 {
    if residual >= 0.0 {
        tau * residual
    } else {
        (tau - 1.0) * residual
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileFit {
    pub tau: f64,
    pub intercept: f64,
    pub slopes: Vec<f64>,
    /// Set when the design was rank deficient and the fit fell back to an intercept.
    pub degenerate: bool,
}

impl QuantileFit {
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.intercept + self.slopes.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Prediction clipped to `[0, 1]`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.raw(x).clamp(0.0, 1.0)
    }

    pub fn loss(&self, features: &[Vec<f64>], y: &[f64]) -> f64 {
        features.iter().zip(y).map(|(x, &v)| pinball(v - self.raw(x), self.tau)).sum()
    }
}

/// Exact sample `tau`-quantile minimising the pinball loss. When `n * tau` is an
/// integer `k` every value between the k-th and (k+1)-th order statistics is optimal;
/// the midpoint is returned, so `tau = 0.5` gives the usual median.
pub fn sample_quantile(values: &[f64], tau: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let pos = n as f64 * tau;
    let k = pos.round();
    if (pos - k).abs() < 1e-12 && k >= 1.0 && (k as usize) < n {
        let k = k as usize;
        (v[k - 1] + v[k]) / 2.0
    } else {
        v[(pos.ceil() as usize).clamp(1, n) - 1]
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < PIVOT_TOLERANCE * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (done, rest) = a.split_at_mut(col + 1);
        let pivot = &done[col];
        for (r, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[col + 1 + r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Weighted least squares with an intercept column.
pub(crate) fn weighted_ls(features: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let p = features[0].len() + 1;
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for ((x, &v), &wt) in features.iter().zip(y).zip(w) {
        let row: Vec<f64> = std::iter::once(1.0).chain(x.iter().copied()).collect();
        for i in 0..p {
            b[i] += wt * row[i] * v;
            for j in 0..p {
                a[i][j] += wt * row[i] * row[j];
            }
        }
    }
    solve(a, b)
}

/// Centred design is full rank.
fn full_rank(features: &[Vec<f64>]) -> bool {
    let n = features.len() as f64;
    let p = features[0].len();
    if p == 0 {
        return false;
    }
    let mean: Vec<f64> = (0..p).map(|j| features.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let mut a = vec![vec![0.0; p]; p];
    for x in features {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    let trace: f64 = (0..p).map(|i| a[i][i]).sum();
    trace > 1e-12 * n && solve(a, vec![0.0; p]).is_some()
}

/// Linear `tau`-quantile regression by iteratively reweighted least squares.
/// A rank-deficient design falls back to the exact intercept-only quantile.
pub fn quantile_fit(features: &[Vec<f64>], y: &[f64], tau: f64) -> Result<QuantileFit, DifficultyError> {
    if features.len() != y.len() {
        return Err(DifficultyError::Shape(format!("quantile fit: {} rows, {} targets", features.len(), y.len())));
    }
    if y.len() < 2 {
        return Err(DifficultyError::Empty("quantile fit needs two samples"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(DifficultyError::Shape(format!("quantile level {tau} outside (0, 1)")));
    }
    let p = features[0].len();
    if features.iter().any(|x| x.len() != p) || features.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(DifficultyError::Shape("quantile fit: ragged or non-finite design".into()));
    }
    let intercept_only = |degenerate| QuantileFit {
        tau,
        intercept: sample_quantile(y, tau),
        slopes: vec![0.0; p],
        degenerate,
    };
    if !full_rank(features) {
        return Ok(intercept_only(p > 0));
    }
    let mut w = vec![1.0; y.len()];
    let Some(mut beta) = weighted_ls(features, y, &w) else {
        return Ok(intercept_only(true));
    };
    let as_fit = |beta: &[f64]| QuantileFit {
        tau,
        intercept: beta[0],
        slopes: beta[1..].to_vec(),
        degenerate: false,
    };
    for _ in 0..IRLS_ROUNDS {
        let fit = as_fit(&beta);
        for ((x, &v), wt) in features.iter().zip(y).zip(w.iter_mut()) {
            let r = v - fit.raw(x);
            let side = if r >= 0.0 { tau } else { 1.0 - tau };
            *wt = side / r.abs().max(IRLS_FLOOR);
        }
        let Some(next) = weighted_ls(features, y, &w) else { break };
        let step = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        if step < 1e-12 {
            break;
        }
    }
    let fit = as_fit(&beta);
    let base = intercept_only(false);
    Ok(if base.loss(features, y) < fit.loss(features, y) { base } else { fit })
}
