//! Classical TSAD probes and the Global → Structural → Local scan that feeds
//! the Observation stage.

pub mod gradient;
pub mod matrix_profile;
pub mod spectral;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use gradient::{gradient_exceedances, smoothed_gradient, GradientExceedance, GradientResult};
pub use matrix_profile::{
    discord_zscores, matrix_profile, top_discords, DiscordScores, DiscordSegment, MatrixProfile,
};
pub use spectral::{dominant_period, sliding_period_scan, PeriodEstimate, PeriodScan};
pub use stats::{hbos_score, ksigma_envelope, summary_stats, EnvelopeResult, SummaryStats};

use crate::domain::{AnomalyInterval, TimeSeries};
use crate::error::{Error, Result};

/// Probe parameters. Defaults: k = 3, smoothing window 21, matrix-profile
/// window 50, period window 120, k_band = 3, discord threshold 3.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanParams {
    /// Envelope and gradient multiplier.
    pub k: f64,
    pub smooth_window: usize,
    pub mp_window: usize,
    pub period_window: usize,
    pub period_stride: usize,
    pub k_band: f64,
    pub discord_threshold: f64,
    pub hbos_bins: usize,
    /// Peak-to-median power ratio required for a "clear" period.
    pub peak_ratio: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            k: 3.0,
            smooth_window: 21,
            mp_window: 50,
            period_window: 120,
            period_stride: 20,
            k_band: 3.0,
            discord_threshold: 3.5,
            hbos_bins: 10,
            peak_ratio: spectral::DEFAULT_PEAK_RATIO,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("k_band", self.k_band),
            ("discord_threshold", self.discord_threshold),
            ("peak_ratio", self.peak_ratio),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.smooth_window < 3 || self.smooth_window % 2 == 0 {
            return Err(Error::config("smooth_window must be odd and >= 3"));
        }
        if self.mp_window < 4 {
            return Err(Error::config("mp_window must be >= 4"));
        }
        if self.period_window < 16 || self.period_stride == 0 {
            return Err(Error::config("period_window must be >= 16 and period_stride > 0"));
        }
        if self.hbos_bins < 2 {
            return Err(Error::config("hbos_bins must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopDiscord {
    pub index: usize,
    pub distance: f64,
    pub zscore: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindows {
    pub smooth_window: usize,
    pub mp_window: usize,
    pub period_window: usize,
}

/// Candidate intervals surfaced by each probe before any ground truth is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanCandidates {
    pub envelope: Vec<AnomalyInterval>,
    pub gradient: Vec<AnomalyInterval>,
    pub period: Vec<AnomalyInterval>,
    pub discord: Vec<AnomalyInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub mean: f64,
    pub std: f64,
    pub max_abs_z: f64,
    pub hbos: Vec<f64>,
    pub grad_mean: f64,
    pub grad_std: f64,
    pub dominant_period: Option<PeriodEstimate>,
    pub typical_window_period: f64,
    pub top_discord: Option<TopDiscord>,
    pub windows: ScanWindows,
    pub candidates: ScanCandidates,
}

impl ScanReport {
    /// Index of the highest HBOS score (lowest index on ties).
    pub fn hbos_argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &s) in self.hbos.iter().enumerate() {
            if best.is_none_or(|b| s > self.hbos[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Run every probe, in Global → Structural → Local order, and collect the
/// statistics plus each probe's candidate intervals.
pub fn hierarchical_scan(series: &TimeSeries, params: &ScanParams) -> Result<ScanReport> {
    params.validate()?;
    let x = series.values();

    // global
    let summary = summary_stats(x);
    let hbos = hbos_score(x, params.hbos_bins)?;
    let envelope = ksigma_envelope(x, params.k)?;

    // structural
    let grad = smoothed_gradient(x, params.smooth_window)?;
    let grad_exc = gradient_exceedances(&grad, params.k)?;
    let dominant = dominant_period(x, params.peak_ratio)?;
    let scan = sliding_period_scan(
        x,
        params.period_window,
        params.period_stride,
        params.k_band,
        params.peak_ratio,
    )?;

    // local
    let mp = matrix_profile(x, params.mp_window)?;
    let discord = discord_zscores(&mp.profile, params.discord_threshold)?;
    let top = TopDiscord {
        index: discord.index,
        distance: discord.distance,
        zscore: discord.zscore,
        significant: discord.significant,
    };
    let discord_candidates = if discord.significant {
        vec![AnomalyInterval {
            start: discord.index,
            end: discord.index + params.mp_window - 1,
        }]
    } else {
        Vec::new()
    };

    Ok(ScanReport {
        mean: summary.mean,
        std: summary.std,
        max_abs_z: summary.max_abs_z,
        hbos,
        grad_mean: grad.mean,
        grad_std: grad.std,
        dominant_period: dominant,
        typical_window_period: scan.typical,
        top_discord: Some(top),
        windows: ScanWindows {
            smooth_window: params.smooth_window,
            mp_window: params.mp_window,
            period_window: params.period_window,
        },
        candidates: ScanCandidates {
            envelope: envelope.intervals,
            gradient: grad_exc.intervals,
            period: scan.intervals,
            discord: discord_candidates,
        },
    })
}
