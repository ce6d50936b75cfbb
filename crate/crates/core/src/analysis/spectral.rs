//! FFT periodograms: the global dominant period and the sliding-window
//! period scan with a MAD tolerance band.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::stats::median;
use crate::domain::{normalize_intervals, AnomalyInterval};
use crate::error::{Error, Result};

/// Consistency constant turning a MAD into a Gaussian-equivalent scale.
pub const MAD_SCALE: f64 = 1.4826;

/// Default minimum ratio of peak power to median non-zero-bin power.
pub const DEFAULT_PEAK_RATIO: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Peak power over median power of the non-zero bins.
    pub peak_ratio: f64,
}

/// Power of bins `1..=n/2` of the mean-removed series (index 0 is bin 1).
fn power_spectrum(values: &[f64], n_fft: usize, taper: bool) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let w = if taper {
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * t as f64 / (n - 1) as f64).cos()
            } else {
                1.0
            };
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    buf[1..=n_fft / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Highest-power non-zero bin, ties toward the lowest frequency.
fn argmax(power: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in power.iter().enumerate() {
        if p > power[best] {
            best = i;
        }
    }
    best
}

/// Period `T / k` of the strongest DFT bin with its peak-to-median ratio,
/// regardless of significance. `None` when the spectrum is identically zero.
pub fn periodogram_peak(values: &[f64]) -> Option<PeriodEstimate> {
    if values.len() < 4 {
        return None;
    }
    let power = power_spectrum(values, values.len(), false);
    let best = argmax(&power);
    let peak = power[best];
    if !(peak > 0.0) {
        return None;
    }
    let med = median(&power);
    let peak_ratio = if med > 0.0 { peak / med } else { f64::INFINITY };
    Some(PeriodEstimate {
        period: values.len() as f64 / (best + 1) as f64,
        peak_ratio,
    })
}

/// Dominant period, present only when the peak clears `min_ratio` × the
/// median non-zero-bin power.
pub fn dominant_period(values: &[f64], min_ratio: f64) -> Result<Option<PeriodEstimate>> {
    if values.len() < 8 {
        return Err(Error::config(format!(
            "dominant period needs at least 8 samples, got {}",
            values.len()
        )));
    }
    Ok(periodogram_peak(values).filter(|p| p.peak_ratio >= min_ratio))
}

/// Sub-bin period estimate for short windows: Hann taper, zero padding to
/// at least 16× the window and parabolic interpolation around the peak.
/// Only periods no longer than the window are considered.
pub fn refined_period(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 4 {
        return None;
    }
    let n_fft = (16 * n).next_power_of_two();
    let power = power_spectrum(values, n_fft, true);
    // bin index b in `power` is frequency (b + 1) / n_fft; period <= n  ⇔  b + 1 >= n_fft / n
    let first = (n_fft / n).max(1) - 1;
    let best = first + argmax(&power[first..]);
    if !(power[best] > 0.0) {
        return None;
    }
    let k = (best + 1) as f64;
    let offset = if best > first && best + 1 < power.len() {
        let (a, b, c) = (power[best - 1], power[best], power[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some(n_fft as f64 / (k + offset))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodScan {
    pub window: usize,
    pub stride: usize,
    pub k_band: f64,
    pub window_starts: Vec<usize>,
    pub periods: Vec<f64>,
    /// Median of `periods`.
    pub typical: f64,
    pub mad: f64,
    /// `1.4826 · MAD`.
    pub robust_scale: f64,
    pub lower: f64,
    pub upper: f64,
    pub deviating_windows: usize,
    pub intervals: Vec<AnomalyInterval>,
}

/// `median ± k · 1.4826 · MAD` expressed from the already-scaled dispersion.
pub fn robust_band(typical: f64, robust_scale: f64, k_band: f64) -> (f64, f64) {
    (typical - k_band * robust_scale, typical + k_band * robust_scale)
}

fn window_starts(len: usize, window: usize, stride: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..=len - window).step_by(stride).collect();
    if *starts.last().unwrap() != len - window {
        starts.push(len - window);
    }
    starts
}

/// Windows lacking a significant peak inherit the previous window's period;
/// the first falls back to the global dominant period, then to its own raw
/// peak, then to `W`.
pub fn sliding_period_scan(
    values: &[f64],
    window: usize,
    stride: usize,
    k_band: f64,
    min_ratio: f64,
) -> Result<PeriodScan> {
    if window < 16 {
        return Err(Error::config(format!("period window must be >= 16, got {window}")));
    }
    if window > values.len() {
        return Err(Error::config(format!(
            "period window {window} exceeds series length {}",
            values.len()
        )));
    }
    if stride == 0 {
        return Err(Error::config("period stride must be positive"));
    }
    if !(k_band > 0.0 && k_band.is_finite()) {
        return Err(Error::config(format!("k_band must be positive, got {k_band}")));
    }

    let starts = window_starts(values.len(), window, stride);
    let global = if values.len() >= 8 {
        dominant_period(values, min_ratio)?.map(|p| p.period)
    } else {
        None
    };
    let mut periods: Vec<f64> = Vec::with_capacity(starts.len());
    for &s in &starts {
        let seg = &values[s..s + window];
        let significant = periodogram_peak(seg)
            .filter(|p| p.peak_ratio >= min_ratio)
            .and_then(|_| refined_period(seg));
        let p = match (significant, periods.last()) {
            (Some(p), _) => p,
            (None, Some(&prev)) => prev,
            (None, None) => global
                .or_else(|| refined_period(seg))
                .unwrap_or(window as f64),
        };
        periods.push(p);
    }

    let typical = median(&periods);
    let deviations: Vec<f64> = periods.iter().map(|p| (p - typical).abs()).collect();
    let mad = median(&deviations);
    let robust_scale = MAD_SCALE * mad;
    let (lower, upper) = robust_band(typical, robust_scale, k_band);
    // rounding slack so identical estimates never flag each other when MAD = 0
    let slack = 1e-9 * typical.abs().max(1.0);

    let spans: Vec<AnomalyInterval> = starts
        .iter()
        .zip(&periods)
        .filter(|(_, &p)| p < lower - slack || p > upper + slack)
        .map(|(&s, _)| AnomalyInterval {
            start: s,
            end: s + window - 1,
        })
        .collect();
    let deviating_windows = spans.len();
    let intervals = normalize_intervals(&spans, values.len())?;

    Ok(PeriodScan {
        window,
        stride,
        k_band,
        window_starts: starts,
        periods,
        typical,
        mad,
        robust_scale,
        lower,
        upper,
        deviating_windows,
        intervals,
    })
}
