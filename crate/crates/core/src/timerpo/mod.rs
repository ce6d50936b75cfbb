//! Group-relative advantages refined by an optimal-transport reasoning signal.
//!
//! Per group: outcome rewards are standardized into `Â_main`; each response's
//! token embeddings are transported onto the expert trace, `exp(-W/τ)` is
//! standardized into `Â_TsR`; the part of `Â_TsR` orthogonal to `Â_main` is
//! added with weight `α`.

pub mod advantage;
pub mod embed;
pub mod rewards;
pub mod transport;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use advantage::{
    clipped_objective, clipped_term, final_advantage, group_normalize, group_stats, kl_estimate,
    orthogonalize, reasoning_reward,
};
pub use embed::{whitespace_tokens, ToyEmbedder, TokenEmbeddingSequence};
pub use rewards::{
    class_reward, format_reward, location_reward, score_response, total_reward, GroundTruth,
    RewardBreakdown, RewardWeights,
};
pub use transport::{cost_matrix, cosine_cost, sinkhorn, SinkhornConfig, TransportResult};

use crate::domain::LabeledInstance;
use crate::error::{Error, Result};
use crate::metrics::ResponseRecord;

pub const DEFAULT_GROUP_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvantageConfig {
    pub weights: RewardWeights,
    /// Weight of the orthogonalized reasoning advantage.
    pub alpha: f64,
    /// Temperature of `exp(-W/τ)`.
    pub tau: f64,
    /// Guard in the normalizers and the projection.
    pub eps: f64,
    pub sinkhorn: SinkhornConfig,
}

impl Default for AdvantageConfig {
    fn default() -> Self {
        Self {
            weights: RewardWeights::default(),
            alpha: 0.3,
            tau: 1.0,
            eps: 1e-8,
            sinkhorn: SinkhornConfig::default(),
        }
    }
}

impl AdvantageConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.sinkhorn.validate()?;
        if !self.alpha.is_finite() {
            return Err(Error::config("alpha must be finite"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::config(format!("eps must be >= 0, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Convergence summary of one response-to-expert transport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtSummary {
    pub w: f64,
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAdvantages {
    pub group_size: usize,
    pub breakdown: Vec<RewardBreakdown>,
    /// Total outcome rewards `r`.
    pub rewards: Vec<f64>,
    pub r_tsr: Vec<f64>,
    pub a_main: Vec<f64>,
    pub a_tsr: Vec<f64>,
    pub a_perp: Vec<f64>,
    pub a_final: Vec<f64>,
    pub mu_r: f64,
    pub sigma_r: f64,
    pub mu_tsr: f64,
    pub sigma_tsr: f64,
    pub eps: f64,
    pub alpha: f64,
    pub ot: Vec<OtSummary>,
    /// Some marginal was filled in as uniform because no weights were given.
    pub uniform_marginals: bool,
}

/// The full chain for one group: rewards, `Â_main`, transport and `r_TsR`,
/// `Â_TsR`, projection, `A_final`.
pub fn compute_group_advantages(
    responses: &[ResponseRecord],
    gt: &LabeledInstance,
    expert: &TokenEmbeddingSequence,
    embeddings: &[TokenEmbeddingSequence],
    config: &AdvantageConfig,
) -> Result<GroupAdvantages> {
    group_advantages_for(responses, &GroundTruth::from(gt), expert, embeddings, config)
}

/// [`compute_group_advantages`] against a bare ground-truth target.
pub fn group_advantages_for(
    responses: &[ResponseRecord],
    gt: &GroundTruth,
    expert: &TokenEmbeddingSequence,
    embeddings: &[TokenEmbeddingSequence],
    config: &AdvantageConfig,
) -> Result<GroupAdvantages> {
    config.validate()?;
    let g = responses.len();
    if g < 2 {
        return Err(Error::config(format!("group size must be >= 2, got {g}")));
    }
    if embeddings.len() != g {
        return Err(Error::shape(format!("{} embedding sequences for {g} responses", embeddings.len())));
    }

    let breakdown = responses
        .iter()
        .map(|r| score_response(r, gt, &config.weights))
        .collect::<Result<Vec<_>>>()?;
    let rewards: Vec<f64> = breakdown.iter().map(|b| b.total).collect();
    let (mu_r, sigma_r) = group_stats(&rewards);
    let a_main = group_normalize(&rewards, config.eps)?;

    let transports = embeddings
        .par_iter()
        .map(|e| {
            let c = cost_matrix(e, expert)?;
            sinkhorn(&c, &e.weights, &expert.weights, &config.sinkhorn)
        })
        .collect::<Result<Vec<_>>>()?;
    let r_tsr = transports
        .iter()
        .map(|t| reasoning_reward(t.distance, config.tau))
        .collect::<Result<Vec<_>>>()?;
    let (mu_tsr, sigma_tsr) = group_stats(&r_tsr);
    let a_tsr = group_normalize(&r_tsr, config.eps)?;
    let a_perp = orthogonalize(&a_tsr, &a_main, config.eps)?;
    let a_final = final_advantage(&a_main, &a_perp, config.alpha)?;

    Ok(GroupAdvantages {
        group_size: g,
        breakdown,
        rewards,
        r_tsr,
        a_main,
        a_tsr,
        a_perp,
        a_final,
        mu_r,
        sigma_r,
        mu_tsr,
        sigma_tsr,
        eps: config.eps,
        alpha: config.alpha,
        ot: transports
            .iter()
            .map(|t| OtSummary {
                w: t.distance,
                residual: t.residual,
                iters: t.iterations,
                converged: t.converged,
            })
            .collect(),
        uniform_marginals: expert.uniform || embeddings.iter().any(|e| e.uniform),
    })
}

/// One group of the advantage report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub id: String,
    pub rewards: Vec<f64>,
    pub a_main: Vec<f64>,
    pub a_tsr: Vec<f64>,
    pub a_perp: Vec<f64>,
    pub a_final: Vec<f64>,
    pub ot: Vec<OtSummary>,
    pub uniform_marginals: bool,
}

impl GroupReport {
    pub fn new(id: impl Into<String>, adv: &GroupAdvantages) -> Self {
        GroupReport {
            id: id.into(),
            rewards: adv.rewards.clone(),
            a_main: adv.a_main.clone(),
            a_tsr: adv.a_tsr.clone(),
            a_perp: adv.a_perp.clone(),
            a_final: adv.a_final.clone(),
            ot: adv.ot.clone(),
            uniform_marginals: adv.uniform_marginals,
        }
    }
}

/// Advantage report: the configuration echoed in the header, then the groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub config: AdvantageConfig,
    pub groups: Vec<GroupReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AnomalyClass, AnomalyInterval, TimeSeries};
    use crate::metrics::parse_response;

    fn gt() -> LabeledInstance {
        let s = TimeSeries::new((0..200).map(|t| (t as f64 / 7.0).sin()).collect()).unwrap();
        LabeledInstance::new("g", s, AnomalyClass::Trend, &[AnomalyInterval { start: 50, end: 80 }], 0).unwrap()
    }

    #[test]
    fn expert_copy_gets_top_reasoning_reward() {
        let emb = ToyEmbedder::new(32).unwrap();
        let expert_text = "the gradient rises sharply between 50 and 80 so the trend is anomalous";
        let texts = [
            expert_text,
            "values look periodic everywhere",
            "a spike appears near 120",
            "the gradient rises near 60",
            "nothing unusual",
        ];
        let responses: Vec<ResponseRecord> = texts
            .iter()
            .map(|t| parse_response(&format!("<think>{t}</think><answer>[[50, 80]]</answer><class>trend</class>")))
            .collect();
        let expert = emb.embed(&whitespace_tokens(expert_text)).unwrap();
        let embeddings: Vec<_> = texts.iter().map(|t| emb.embed(&whitespace_tokens(t)).unwrap()).collect();
        let adv = compute_group_advantages(&responses, &gt(), &expert, &embeddings, &AdvantageConfig::default()).unwrap();
        assert!(adv.ot[0].w < 1e-3, "{:?}", adv.ot);
        assert!(adv.r_tsr[1..].iter().all(|&r| r < adv.r_tsr[0]));
        // every outcome reward is identical, so only reasoning moves A_final
        assert_eq!(adv.a_main, vec![0.0; 5]);
        assert!(adv.uniform_marginals);
    }

    #[test]
    fn identical_group_is_all_zero() {
        let emb = ToyEmbedder::new(8).unwrap();
        let text = "<think>flat</think><answer>[[50, 80]]</answer><class>trend</class>";
        let responses = vec![parse_response(text); 5];
        let e = emb.embed(&whitespace_tokens("flat")).unwrap();
        let adv = compute_group_advantages(&responses, &gt(), &e, &vec![e.clone(); 5], &AdvantageConfig::default()).unwrap();
        assert_eq!(adv.a_main, vec![0.0; 5]);
        assert_eq!(adv.a_tsr, vec![0.0; 5]);
        assert_eq!(adv.a_final, vec![0.0; 5]);
    }

    #[test]
    fn config_validation() {
        let bad = AdvantageConfig { tau: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let parsed: AdvantageConfig = serde_json::from_str(r#"{"alpha": 0.5}"#).unwrap();
        assert_eq!(parsed.alpha, 0.5);
        assert_eq!(parsed.tau, 1.0);
        assert!(serde_json::from_str::<AdvantageConfig>(r#"{"alfa": 0.5}"#).is_err());
    }
}
