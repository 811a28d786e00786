//! Rank normalisation and monotone interpolants.

use serde::{Deserialize, Serialize};

/// Hazen plotting positions `(rank - 0.5) / n`, ties sharing their average rank.
pub fn quantile_rank(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j average to (i + j + 1) / 2
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            out[k] = (rank - 0.5) / n as f64;
        }
        i = j;
    }
    out
}

/// Non-decreasing piecewise-linear map through `(xs, ys)`, flat outside the knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monotone {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Monotone {
    /// Knots must be strictly increasing in `x` and non-decreasing in `y`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Option<Self> {
        let ok = !xs.is_empty()
            && xs.len() == ys.len()
            && xs.windows(2).all(|w| w[0] < w[1])
            && ys.windows(2).all(|w| w[0] <= w[1]);
        ok.then_some(Self { xs, ys })
    }

    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.xs, &self.ys, x)
    }

    /// Some `x` with `eval(x) = y`, clamped to the knot range; flat stretches map to
    /// their midpoint.
    pub fn inverse(&self, y: f64) -> f64 {
        let (xs, ys) = (&self.xs, &self.ys);
        let n = xs.len();
        if y <= ys[0] {
            let last_flat = ys.partition_point(|&v| v <= ys[0]) - 1;
            return if y < ys[0] { xs[0] } else { (xs[0] + xs[last_flat]) / 2.0 };
        }
        if y >= ys[n - 1] {
            let first_flat = ys.partition_point(|&v| v < ys[n - 1]);
            return if y > ys[n - 1] { xs[n - 1] } else { (xs[first_flat] + xs[n - 1]) / 2.0 };
        }
        let lo = ys.partition_point(|&v| v < y);
        let hi = ys.partition_point(|&v| v <= y);
        if hi > lo {
            // y is hit exactly on knots lo..hi
            return (xs[lo] + xs[hi - 1]) / 2.0;
        }
        let (a, b) = (lo - 1, lo);
        xs[a] + (y - ys[a]) / (ys[b] - ys[a]) * (xs[b] - xs[a])
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&q| q <= x);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Empirical CDF with Hazen positions at the distinct sample values, interpolated
/// linearly between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub map: Monotone,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Option<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let ranks = quantile_rank(values);
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(ranks).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        let (xs, ys) = pairs.into_iter().unzip();
        Monotone::new(xs, ys).map(|map| Self { map })
    }

    pub fn rank(&self, x: f64) -> f64 {
        self.map.eval(x)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.map.inverse(p)
    }
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (quantile_rank(a), quantile_rank(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}
