//! Outcome rewards: format, classification and localization.

use serde::{Deserialize, Serialize};

use crate::domain::{AnomalyClass, AnomalyInterval, LabeledInstance};
use crate::expcot::ExpCotTrace;
use crate::error::{Error, Result};
use crate::metrics::{count_blocks, default_window, parse_response, score_prediction, ResponseRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub format: f64,
    pub class: f64,
    pub location: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            format: 0.1,
            class: 0.2,
            location: 0.7,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.format, self.class, self.location];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::config("reward weights must be finite and non-negative"));
        }
        if !w.iter().any(|&x| x > 0.0) {
            return Err(Error::config("at least one reward weight must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format: f64,
    pub class: f64,
    pub location: f64,
    pub total: f64,
}

/// 1 iff there is exactly one think, answer and class block, the answer is a
/// list of integer pairs and the class is in the vocabulary.
pub fn format_reward(text: &str) -> f64 {
    let once = ["think", "answer", "class"].iter().all(|t| count_blocks(text, t) == 1);
    let r = parse_response(text);
    if once && r.flags.intervals && r.flags.class {
        1.0
    } else {
        0.0
    }
}

/// 1 iff both strings name the same class after case/whitespace normalization.
pub fn class_reward(pred: &str, gt: &str) -> f64 {
    match (AnomalyClass::parse_normalized(pred), AnomalyClass::parse_normalized(gt)) {
        (Some(a), Some(b)) if a == b => 1.0,
        _ => 0.0,
    }
}

/// Affinity F1 at the default window; `None` (unparseable answer) scores 0.
pub fn location_reward(pred: Option<&[AnomalyInterval]>, gt: &[AnomalyInterval], len: usize) -> Result<f64> {
    Ok(score_prediction(pred, gt, len, default_window(len))?.f1)
}

pub fn total_reward(format: f64, class: f64, location: f64, weights: &RewardWeights) -> RewardBreakdown {
    RewardBreakdown {
        format,
        class,
        location,
        total: weights.format * format + weights.class * class + weights.location * location,
    }
}

/// What the outcome rewards compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub class: AnomalyClass,
    pub intervals: Vec<AnomalyInterval>,
    /// Series length `T`.
    pub length: usize,
}

impl From<&LabeledInstance> for GroundTruth {
    fn from(inst: &LabeledInstance) -> Self {
        GroundTruth {
            class: inst.class,
            intervals: inst.intervals.clone(),
            length: inst.len(),
        }
    }
}

impl From<&ExpCotTrace> for GroundTruth {
    fn from(trace: &ExpCotTrace) -> Self {
        GroundTruth {
            class: trace.conclusion.class,
            intervals: trace.conclusion.intervals.clone(),
            length: trace.length,
        }
    }
}

/// All three rewards for one parsed response.
pub fn score_response(resp: &ResponseRecord, gt: &GroundTruth, weights: &RewardWeights) -> Result<RewardBreakdown> {
    let format = format_reward(&resp.raw);
    let class = match resp.class {
        Some(c) if c == gt.class => 1.0,
        _ => 0.0,
    };
    let location = location_reward(resp.intervals.as_deref(), &gt.intervals, gt.length)?;
    Ok(total_reward(format, class, location, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_sums() {
        let w = RewardWeights::default();
        assert!((total_reward(1.0, 1.0, 1.0, &w).total - 1.0).abs() < 1e-12);
        assert_eq!(total_reward(0.0, 0.0, 0.0, &w).total, 0.0);
        assert!((total_reward(1.0, 1.0, 0.5, &w).total - 0.65).abs() < 1e-12);
        assert!(RewardWeights { format: 0.0, class: 0.0, location: 0.0 }.validate().is_err());
        assert!(RewardWeights { format: -1.0, ..w }.validate().is_err());
    }

    #[test]
    fn format_rules() {
        let ok = "<think>a</think><answer>[[1, 2]]</answer><class>trend</class>";
        assert_eq!(format_reward(ok), 1.0);
        assert_eq!(format_reward("<think>a</think><answer>[]</answer><class>normal</class>"), 1.0);
        assert_eq!(format_reward("<think>a</think><answer>[[1, 2]]</answer>"), 0.0);
        assert_eq!(format_reward(&format!("{ok}<class>trend</class>")), 0.0);
        assert_eq!(format_reward("<think>a</think><answer>[[1, 2]]</answer><class>wobbly</class>"), 0.0);
        assert_eq!(format_reward("<think>a</think><answer>1, 2</answer><class>trend</class>"), 0.0);
    }

    #[test]
    fn class_rules() {
        assert_eq!(class_reward("trend", "trend"), 1.0);
        assert_eq!(class_reward("seasonal", "trend"), 0.0);
        assert_eq!(class_reward(" Global Point ", "global point"), 1.0);
        assert_eq!(class_reward("???", "trend"), 0.0);
    }

    #[test]
    fn location_rules() {
        let gt = [AnomalyInterval { start: 4, end: 5 }];
        assert_eq!(location_reward(Some(&gt), &gt, 10).unwrap(), 1.0);
        assert_eq!(location_reward(Some(&[]), &gt, 10).unwrap(), 0.0);
        assert_eq!(location_reward(None, &gt, 10).unwrap(), 0.0);
        let far = [AnomalyInterval { start: 5000, end: 5001 }];
        assert_eq!(location_reward(Some(&far), &gt, 10).unwrap(), 0.0);
    }
}
