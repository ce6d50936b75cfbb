//! Trend stability from smoothed first differences.

use serde::{Deserialize, Serialize};

use super::stats::mean_std;
use crate::domain::{normalize_intervals, AnomalyInterval};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientResult {
    pub window: usize,
    /// `g_t = s_{t+1} - s_t` of the smoothed series; length `T - 1`.
    pub gradient: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientExceedance {
    pub k: f64,
    /// `k · σ_grad`; exceedances satisfy `|g_t - ḡ| > threshold`.
    pub threshold: f64,
    pub exceed_count: usize,
    pub intervals: Vec<AnomalyInterval>,
}

/// Centered moving average with a window that shrinks symmetrically at the
/// edges, so linear segments are reproduced exactly.
pub fn centered_moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|t| {
            let h = half.min(t).min(n - 1 - t);
            let (a, b) = (t - h, t + h + 1);
            // exact sum for short spans avoids prefix cancellation on long series
            if b - a <= 64 {
                values[a..b].iter().sum::<f64>() / (b - a) as f64
            } else {
                (prefix[b] - prefix[a]) / (b - a) as f64
            }
        })
        .collect()
}

pub fn smoothed_gradient(values: &[f64], window: usize) -> Result<GradientResult> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::config(format!(
            "smoothing window must be odd and >= 3, got {window}"
        )));
    }
    if window >= values.len() {
        return Err(Error::config(format!(
            "smoothing window {window} must be shorter than the series ({})",
            values.len()
        )));
    }
    let smooth = centered_moving_average(values, window);
    let gradient: Vec<f64> = smooth.windows(2).map(|w| w[1] - w[0]).collect();
    let (mean, std) = mean_std(&gradient);
    Ok(GradientResult {
        window,
        gradient,
        mean,
        std,
    })
}

/// Gradient index `i` spans series points `i` and `i + 1`; exceeding spans
/// are merged into candidate intervals.
pub fn gradient_exceedances(result: &GradientResult, k: f64) -> Result<GradientExceedance> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::config(format!("gradient k must be positive, got {k}")));
    }
    let threshold = k * result.std;
    if !(result.std > 0.0) || !result.std.is_finite() {
        return Ok(GradientExceedance {
            k,
            threshold,
            exceed_count: 0,
            intervals: Vec::new(),
        });
    }
    let spans: Vec<AnomalyInterval> = result
        .gradient
        .iter()
        .enumerate()
        .filter(|(_, g)| (*g - result.mean).abs() > threshold)
        .map(|(i, _)| AnomalyInterval { start: i, end: i + 1 })
        .collect();
    let exceed_count = spans.len();
    let intervals = normalize_intervals(&spans, result.gradient.len() + 1)?;
    Ok(GradientExceedance {
        k,
        threshold,
        exceed_count,
        intervals,
    })
}
