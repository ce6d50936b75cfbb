//! Distributional probes: moments, HBOS and the k-sigma envelope.

use serde::{Deserialize, Serialize};

use crate::domain::{labels_to_intervals, AnomalyInterval};
use crate::error::{Error, Result};

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Median of a non-empty slice (mean of the two middle values for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub max_abs_z: f64,
}

pub fn summary_stats(values: &[f64]) -> SummaryStats {
    let (mean, std) = mean_std(values);
    let max_abs_z = if std > 0.0 {
        values
            .iter()
            .map(|v| (v - mean).abs() / std)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    SummaryStats {
        mean,
        std,
        max_abs_z,
    }
}

/// Histogram-based outlier score: `-ln p(bin(x_t))` from an equal-width
/// histogram over `[min, max]` with one pseudo-count per bin.
///
/// A constant series collapses to a single effective bin, so every score is 0.
pub fn hbos_score(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::config(format!("hbos needs at least 2 bins, got {bins}")));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = values.len() as f64;
    if !(hi > lo) {
        return Ok(vec![0.0; values.len()]);
    }
    let width = (hi - lo) / bins as f64;
    let bin_of = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut counts = vec![0usize; bins];
    for &x in values {
        counts[bin_of(x)] += 1;
    }
    let total = n + bins as f64;
    Ok(values
        .iter()
        .map(|&x| -((counts[bin_of(x)] as f64 + 1.0) / total).ln())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub k: f64,
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
    pub intervals: Vec<AnomalyInterval>,
    pub exceed_count: usize,
}

/// `[μ - kσ, μ + kσ]`.
pub fn envelope_bounds(mean: f64, std: f64, k: f64) -> (f64, f64) {
    (mean - k * std, mean + k * std)
}

/// Points with `|x_t - μ| > kσ`, aggregated into maximal runs.
pub fn ksigma_envelope(values: &[f64], k: f64) -> Result<EnvelopeResult> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::config(format!("envelope k must be positive, got {k}")));
    }
    let (mean, std) = mean_std(values);
    let (lower, upper) = envelope_bounds(mean, std, k);
    let labels: Vec<u8> = if std > 0.0 {
        values
            .iter()
            .map(|v| u8::from((v - mean).abs() > k * std))
            .collect()
    } else {
        vec![0; values.len()]
    };
    let exceed_count = labels.iter().filter(|&&l| l == 1).count();
    Ok(EnvelopeResult {
        k,
        mean,
        std,
        lower,
        upper,
        intervals: labels_to_intervals(&labels),
        exceed_count,
    })
}
