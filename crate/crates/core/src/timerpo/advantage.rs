//! Group normalization, the reasoning reward, orthogonal projection and the
//! clipped surrogate objective.

use crate::error::{Error, Result};

/// Population mean and standard deviation (corrected two-pass).
pub fn group_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let rough = values.iter().sum::<f64>() / n;
    let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `(v_i - μ) / (σ + ε)` with population σ. An all-equal group maps to exact zeros.
pub fn group_normalize(values: &[f64], eps: f64) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::config(format!("group size must be >= 2, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("group values must be finite"));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::config(format!("epsilon must be finite and >= 0, got {eps}")));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(vec![0.0; values.len()]);
    }
    let (mean, std) = group_stats(values);
    let mut z: Vec<f64> = values.iter().map(|v| (v - mean) / (std + eps)).collect();
    // the rounded mean leaves a residue of order ulp(μ)/σ; remove it
    let drift = z.iter().sum::<f64>() / z.len() as f64;
    z.iter_mut().for_each(|v| *v -= drift);
    Ok(z)
}

/// `exp(-W / τ)`.
pub fn reasoning_reward(distance: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::config(format!("temperature must be positive, got {tau}")));
    }
    if !(distance >= 0.0) {
        return Err(Error::input(format!("transport distance must be >= 0, got {distance}")));
    }
    Ok((-distance / tau).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a_tsr - (⟨a_tsr, a_main⟩ / (‖a_main‖² + ε)) · a_main`.
pub fn orthogonalize(a_tsr: &[f64], a_main: &[f64], eps: f64) -> Result<Vec<f64>> {
    if a_tsr.len() != a_main.len() {
        return Err(Error::shape(format!(
            "advantage lengths differ: {} vs {}",
            a_tsr.len(),
            a_main.len()
        )));
    }
    let denom = dot(a_main, a_main) + eps;
    if denom == 0.0 {
        return Ok(a_tsr.to_vec());
    }
    let coef = dot(a_tsr, a_main) / denom;
    Ok(a_tsr.iter().zip(a_main).map(|(t, m)| t - coef * m).collect())
}

/// `â_main + α · â_perp`.
pub fn final_advantage(a_main: &[f64], a_perp: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if a_main.len() != a_perp.len() {
        return Err(Error::shape(format!(
            "advantage lengths differ: {} vs {}",
            a_main.len(),
            a_perp.len()
        )));
    }
    Ok(a_main.iter().zip(a_perp).map(|(m, p)| m + alpha * p).collect())
}

/// Per-token KL estimate `exp(Δ) - Δ - 1` with `Δ = logp_ref - logp_policy`.
pub fn kl_estimate(logp_policy: &[f64], logp_ref: &[f64]) -> Result<Vec<f64>> {
    if logp_policy.len() != logp_ref.len() {
        return Err(Error::shape("policy and reference log-probabilities differ in length"));
    }
    Ok(logp_policy
        .iter()
        .zip(logp_ref)
        .map(|(p, r)| {
            let d = r - p;
            d.exp() - d - 1.0
        })
        .collect())
}

/// `min(ρA, clip(ρ, 1-ε, 1+ε)A)` for one token.
pub fn clipped_term(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Surrogate objective to maximize:
/// `(1/G) Σ_i (1/|y_i|) Σ_n min(ρA, clip(ρ)A) − β · mean(kl)`, where the KL mean
/// runs over every token of the group.
pub fn clipped_objective(
    ratios: &[Vec<f64>],
    advantages: &[f64],
    clip_eps: f64,
    kl: &[Vec<f64>],
    beta: f64,
) -> Result<f64> {
    if !(clip_eps > 0.0 && clip_eps < 1.0) {
        return Err(Error::config(format!("clip epsilon must lie in (0, 1), got {clip_eps}")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::config(format!("KL coefficient must be >= 0, got {beta}")));
    }
    let g = ratios.len();
    if g == 0 || advantages.len() != g || kl.len() != g {
        return Err(Error::shape(format!(
            "group shapes differ: {g} ratio rows, {} advantages, {} kl rows",
            advantages.len(),
            kl.len()
        )));
    }
    let mut surrogate = 0.0;
    let mut kl_sum = 0.0;
    let mut tokens = 0usize;
    for ((r, &a), k) in ratios.iter().zip(advantages).zip(kl) {
        if r.is_empty() || r.len() != k.len() {
            return Err(Error::shape("each response needs matching, non-empty ratio and kl rows"));
        }
        surrogate += r.iter().map(|&rho| clipped_term(rho, a, clip_eps)).sum::<f64>() / r.len() as f64;
        kl_sum += k.iter().sum::<f64>();
        tokens += k.len();
    }
    Ok(surrogate / g as f64 - beta * kl_sum / tokens as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_cases() {
        assert_eq!(group_normalize(&[0.3; 5], 1e-8).unwrap(), vec![0.0; 5]);
        let a = group_normalize(&[1.0, 0.0], 0.0).unwrap();
        assert_eq!(a, vec![1.0, -1.0]);
        let b = group_normalize(&[2.0, 4.0, 6.0, 8.0, 10.0], 0.0).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        for (x, y) in b.iter().zip([-r2, -r2 / 2.0, 0.0, r2 / 2.0, r2]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(group_normalize(&[1.0], 1e-8).is_err());
    }

    #[test]
    fn reasoning_reward_cases() {
        assert_eq!(reasoning_reward(0.0, 1.0).unwrap(), 1.0);
        assert!((reasoning_reward(2.0, 2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(reasoning_reward(1.0, 0.0).is_err());
    }

    #[test]
    fn projection_cases() {
        assert_eq!(orthogonalize(&[1.0, 0.0], &[1.0, 1.0], 0.0).unwrap(), vec![0.5, -0.5]);
        let p = orthogonalize(&[2.0, -4.0], &[1.0, -2.0], 0.0).unwrap();
        assert!(p.iter().all(|x| x.abs() < 1e-15));
        assert_eq!(orthogonalize(&[1.0, 1.0], &[1.0, -1.0], 0.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(orthogonalize(&[1.0, 2.0], &[0.0, 0.0], 1e-8).unwrap(), vec![1.0, 2.0]);
        let f = final_advantage(&[1.0, -1.0], &[0.5, -0.5], 0.3).unwrap();
        assert!((f[0] - 1.15).abs() < 1e-15 && (f[1] + 1.15).abs() < 1e-15);
        assert_eq!(final_advantage(&[1.0, -1.0], &[0.5, -0.5], 0.0).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn clip_arithmetic() {
        assert_eq!(clipped_term(2.0, 1.0, 0.2), 1.2);
        assert_eq!(clipped_term(0.5, -1.0, 0.2), -0.8);
        let a = [0.5, -0.2, 1.0];
        let ones = vec![vec![1.0; 4]; 3];
        let zeros = vec![vec![0.0; 4]; 3];
        let obj = clipped_objective(&ones, &a, 0.2, &zeros, 0.0).unwrap();
        assert!((obj - a.iter().sum::<f64>() / 3.0).abs() < 1e-15);
        let kl = vec![vec![0.1; 4]; 3];
        let with_kl = clipped_objective(&ones, &a, 0.2, &kl, 0.001).unwrap();
        assert!((obj - with_kl - 0.0001).abs() < 1e-15);
        assert!(clipped_objective(&ones, &a[..2], 0.2, &zeros, 0.0).is_err());
    }

    #[test]
    fn kl_estimator_is_nonnegative() {
        let k = kl_estimate(&[-1.0, -2.0, -0.5], &[-1.0, -1.5, -3.0]).unwrap();
        assert_eq!(k[0], 0.0);
        assert!(k.iter().all(|&x| x >= 0.0));
    }

    proptest! {
        #[test]
        fn reasoning_reward_is_decreasing(a in 0.0f64..50.0, b in 0.0f64..50.0, tau in 0.1f64..5.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (rl, rh) = (reasoning_reward(lo, tau).unwrap(), reasoning_reward(hi, tau).unwrap());
            prop_assume!(rl > 0.0);
            prop_assert!(rl > rh || (rh == 0.0 && rl == 0.0));
        }
    }
}
