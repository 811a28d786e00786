//! Weighted isotonic least squares by pool-adjacent-violators.

use serde::{Deserialize, Serialize};

use super::DifficultyError;

/// Non-decreasing fit of `y` in the given order.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    debug_assert_eq!(y.len(), w.len());
    // blocks of (weighted mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            let wsum = w1 + w2;
            let mean = if wsum > 0.0 { (m1 * w1 + m2 * w2) / wsum } else { (m1 + m2) / 2.0 };
            blocks.truncate(blocks.len() - 2);
            blocks.push((mean, wsum, n1 + n2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, n)| std::iter::repeat_n(m, n)).collect()
}

/// Non-decreasing step function over sorted distinct knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl IsotonicFit {
    /// Value at the largest knot not above `x`; the first value below the range.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k <= x);
        self.values[i.saturating_sub(1)]
    }

    /// Linear interpolation between knots, flat outside. Still non-decreasing.
    pub fn eval_linear(&self, x: f64) -> f64 {
        let (k, v) = (&self.knots, &self.values);
        if x <= k[0] {
            return v[0];
        }
        let i = k.partition_point(|&q| q <= x);
        if i >= k.len() {
            return v[v.len() - 1];
        }
        let t = (x - k[i - 1]) / (k[i] - k[i - 1]);
        v[i - 1] + t * (v[i] - v[i - 1])
    }

    /// Centred three-point moving average of the step values.
    pub fn smoothed(&self) -> IsotonicFit {
        let v = &self.values;
        let n = v.len();
        let values = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        IsotonicFit {
            knots: self.knots.clone(),
            values,
        }
    }
}

/// Isotonic regression of `y` on `x`. Repeated `x` values share one fitted value.
pub fn isotonic_fit(x: &[f64], y: &[f64], weights: &[f64]) -> Result<IsotonicFit, DifficultyError> {
    if x.is_empty() {
        return Err(DifficultyError::Empty("isotonic fit"));
    }
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(DifficultyError::Shape(format!(
            "isotonic fit: {} x, {} y, {} weights",
            x.len(),
            y.len(),
            weights.len()
        )));
    }
    if x.iter().chain(y).chain(weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w < 0.0) {
        return Err(DifficultyError::Shape("isotonic fit: non-finite value or negative weight".into()));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut knots: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for i in order {
        match knots.last() {
            Some(&k) if k == x[i] => {
                let last = ys.len() - 1;
                let wsum = ws[last] + weights[i];
                ys[last] = if wsum > 0.0 { (ys[last] * ws[last] + y[i] * weights[i]) / wsum } else { ys[last] };
                ws[last] = wsum;
            }
            _ => {
                knots.push(x[i]);
                ys.push(y[i]);
                ws.push(weights[i]);
            }
        }
    }
    Ok(IsotonicFit {
        values: pava(&ys, &ws),
        knots,
    })
}

/// Additive model `c + sum_j g_j(x_j)` with every `g_j` non-decreasing, by backfitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveIsotonic {
    pub intercept: f64,
    pub axes: Vec<IsotonicFit>,
}

const BACKFIT_ROUNDS: usize = 50;

impl AdditiveIsotonic {
    pub fn fit(features: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Self, DifficultyError> {
        let n = y.len();
        if n == 0 {
            return Err(DifficultyError::Empty("additive isotonic fit"));
        }
        let p = features[0].len();
        let wsum: f64 = w.iter().sum();
        let wmean = |v: &[f64]| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
        let mut intercept = wmean(y);
        let mut parts = vec![vec![0.0; n]; p];
        let mut axes: Vec<IsotonicFit> = Vec::with_capacity(p);
        for round in 0..BACKFIT_ROUNDS {
            let mut change: f64 = 0.0;
            for j in 0..p {
                let resid: Vec<f64> = (0..n)
                    .map(|i| y[i] - intercept - (0..p).filter(|&k| k != j).map(|k| parts[k][i]).sum::<f64>())
                    .collect();
                let xj: Vec<f64> = features.iter().map(|f| f[j]).collect();
                let mut fit = isotonic_fit(&xj, &resid, w)?;
                let fitted: Vec<f64> = xj.iter().map(|&v| fit.eval(v)).collect();
                let centre = wmean(&fitted);
                fit.values.iter_mut().for_each(|v| *v -= centre);
                for i in 0..n {
                    let new = fitted[i] - centre;
                    change = change.max((new - parts[j][i]).abs());
                    parts[j][i] = new;
                }
                if round == 0 {
                    axes.push(fit);
                } else {
                    axes[j] = fit;
                }
            }
            let rest: Vec<f64> = (0..n).map(|i| y[i] - (0..p).map(|k| parts[k][i]).sum::<f64>()).collect();
            intercept = wmean(&rest);
            if change < 1e-10 {
                break;
            }
        }
        Ok(Self { intercept, axes })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.intercept + self.axes.iter().zip(x).map(|(g, &v)| g.eval_linear(v)).sum::<f64>()
    }
}
