//! Exact self-join matrix profile (z-normalized Euclidean distance) and
//! discord standardization.

use serde::{Deserialize, Serialize};

use super::stats::mean_std;
use crate::error::{Error, Result};

/// A window whose population std is at most this fraction of its magnitude
/// (floored at 1) is treated as zero-variance; its z-normalized form is the
/// zero vector.
pub const FLAT_TOLERANCE: f64 = 1e-12;

/// Dot products along a diagonal are recomputed from scratch this often to
/// bound drift in the running update.
const REFRESH_EVERY: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixProfile {
    pub window: usize,
    pub profile: Vec<f64>,
    pub nn_index: Vec<usize>,
}

/// Whether a window counts as zero-variance under [`FLAT_TOLERANCE`].
pub fn is_flat(window: &[f64], std: f64) -> bool {
    let scale = window.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    std <= FLAT_TOLERANCE * scale
}

/// Smallest admissible `|i - j|` for a non-trivial match: `ceil(m / 2)`.
pub fn exclusion_radius(m: usize) -> usize {
    m.div_ceil(2)
}

/// `d(i) = min_{|i-j| ≥ m/2} ‖ẑ_i − ẑ_j‖` over all subsequences of length `m`.
///
/// Runs the diagonal dot-product recurrence over a mean-centred copy of the
/// series, so cost is `O(T²)` after an `O(T m)` setup.
pub fn matrix_profile(values: &[f64], m: usize) -> Result<MatrixProfile> {
    let n = values.len();
    if m < 4 || 2 * m > n {
        return Err(Error::config(format!(
            "matrix profile window must satisfy 4 <= m <= T/2, got m={m}, T={n}"
        )));
    }
    let count = n - m + 1;
    let (gmean, _) = mean_std(values);
    let xc: Vec<f64> = values.iter().map(|v| v - gmean).collect();

    let mut mu = Vec::with_capacity(count);
    let mut sd = Vec::with_capacity(count);
    let mut flat = Vec::with_capacity(count);
    for i in 0..count {
        let (_, s) = mean_std(&values[i..i + m]);
        let (mc, _) = mean_std(&xc[i..i + m]);
        mu.push(mc);
        sd.push(s);
        flat.push(is_flat(&values[i..i + m], s));
    }

    let mf = m as f64;
    let sqrt_m = mf.sqrt();
    let dot = |i: usize, j: usize| -> f64 {
        xc[i..i + m].iter().zip(&xc[j..j + m]).map(|(a, b)| a * b).sum()
    };
    let dist = |i: usize, j: usize, qt: f64| -> f64 {
        match (flat[i], flat[j]) {
            (true, true) => 0.0,
            (true, false) | (false, true) => sqrt_m,
            (false, false) => {
                let rho = (qt - mf * mu[i] * mu[j]) / (mf * sd[i] * sd[j]);
                (2.0 * mf * (1.0 - rho)).max(0.0).sqrt()
            }
        }
    };

    let mut profile = vec![f64::INFINITY; count];
    let mut nn_index = vec![usize::MAX; count];
    let mut offer = |i: usize, j: usize, d: f64| {
        if d < profile[i] || (d == profile[i] && j < nn_index[i]) {
            profile[i] = d;
            nn_index[i] = j;
        }
    };

    for k in exclusion_radius(m)..count {
        let mut qt = 0.0;
        for i in 0..count - k {
            let j = i + k;
            if i % REFRESH_EVERY == 0 {
                qt = dot(i, j);
            } else {
                qt += xc[i + m - 1] * xc[j + m - 1] - xc[i - 1] * xc[j - 1];
            }
            let d = dist(i, j, qt);
            offer(i, j, d);
            offer(j, i, d);
        }
    }

    Ok(MatrixProfile {
        window: m,
        profile,
        nn_index,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscordScores {
    pub z: Vec<f64>,
    /// `i* = argmax d(i)`, ties toward the smallest index.
    pub index: usize,
    pub distance: f64,
    pub zscore: f64,
    pub threshold: f64,
    pub significant: bool,
}

/// Standardize the profile (population statistics) and report the top discord.
pub fn discord_zscores(profile: &[f64], threshold: f64) -> Result<DiscordScores> {
    if profile.len() < 2 {
        return Err(Error::config("discord scoring needs a profile of length >= 2"));
    }
    let (mean, std) = mean_std(profile);
    let z: Vec<f64> = if std > 0.0 {
        profile.iter().map(|d| (d - mean) / std).collect()
    } else {
        vec![0.0; profile.len()]
    };
    let mut index = 0;
    for (i, &d) in profile.iter().enumerate() {
        if d > profile[index] {
            index = i;
        }
    }
    let zscore = z[index];
    Ok(DiscordScores {
        index,
        distance: profile[index],
        zscore,
        threshold,
        significant: zscore > threshold,
        z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordSegment {
    pub index: usize,
    pub distance: f64,
}

/// Up to `k` discords, each at least `m` away from every earlier pick.
pub fn top_discords(mp: &MatrixProfile, k: usize) -> Vec<DiscordSegment> {
    let mut order: Vec<usize> = (0..mp.profile.len()).collect();
    order.sort_by(|&a, &b| mp.profile[b].total_cmp(&mp.profile[a]).then(a.cmp(&b)));
    let mut picked: Vec<DiscordSegment> = Vec::new();
    for i in order {
        if picked.len() == k {
            break;
        }
        if picked.iter().all(|p| p.index.abs_diff(i) >= mp.window) {
            picked.push(DiscordSegment {
                index: i,
                distance: mp.profile[i],
            });
        }
    }
    picked
}
