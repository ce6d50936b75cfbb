//! Response parsing, classification accuracy and affinity-based localization
//! scores.
//!
//! Affinity of an index `t` to a set `S` is `max(0, 1 - d(t, S) / w)` where
//! `d` is the distance to the nearest index covered by `S`. Precision averages
//! the affinity of predicted indices to the ground truth; recall does the
//! reverse.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{normalize_intervals, AnomalyClass, AnomalyInterval, LabeledInstance};
use crate::error::{Error, Result};
use crate::io::{read_instances, read_jsonl};

/// Which blocks of a response were found and parsed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFlags {
    pub think: bool,
    /// An answer block exists.
    pub answer: bool,
    /// The answer block parsed as a list of integer pairs.
    pub intervals: bool,
    /// A class block exists.
    pub class_block: bool,
    /// The class block names a vocabulary class.
    pub class: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub raw: String,
    pub think: Option<String>,
    pub answer: Option<String>,
    pub intervals: Option<Vec<AnomalyInterval>>,
    pub class_text: Option<String>,
    pub class: Option<AnomalyClass>,
    pub flags: ParseFlags,
}

/// Contents of the first `<tag>…</tag>` block.
pub fn extract_block<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text.find(&open)? + open.len();
    let len = text[start..].find(&close)?;
    Some(&text[start..start + len])
}

/// Number of complete `<tag>…</tag>` blocks, scanning left to right.
pub fn count_blocks(text: &str, tag: &str) -> usize {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut rest = text;
    let mut n = 0;
    while let Some(i) = rest.find(&open) {
        let after = &rest[i + open.len()..];
        match after.find(&close) {
            Some(j) => {
                n += 1;
                rest = &after[j + close.len()..];
            }
            None => break,
        }
    }
    n
}

/// Parse `[[s, e], ...]` (possibly empty). Each pair needs `0 <= s <= e`.
pub fn parse_interval_list(text: &str) -> Option<Vec<AnomalyInterval>> {
    let pairs: Vec<[i64; 2]> = serde_json::from_str(text.trim()).ok()?;
    pairs
        .into_iter()
        .map(|[s, e]| {
            if s < 0 || e < s {
                None
            } else {
                Some(AnomalyInterval {
                    start: s as usize,
                    end: e as usize,
                })
            }
        })
        .collect()
}

/// Decompose a tagged response. Never fails; the flags record what parsed.
pub fn parse_response(text: &str) -> ResponseRecord {
    let think = extract_block(text, "think").map(str::to_string);
    let answer = extract_block(text, "answer").map(str::to_string);
    let intervals = answer.as_deref().and_then(parse_interval_list);
    let class_text = extract_block(text, "class").map(str::to_string);
    let class = class_text.as_deref().and_then(AnomalyClass::parse_normalized);
    let flags = ParseFlags {
        think: think.is_some(),
        answer: answer.is_some(),
        intervals: intervals.is_some(),
        class_block: class_text.is_some(),
        class: class.is_some(),
    };
    ResponseRecord {
        raw: text.to_string(),
        think,
        answer,
        intervals,
        class_text,
        class,
        flags,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinityScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub window: usize,
}

/// `max(1, round(0.01 · T))`.
pub fn default_window(len: usize) -> usize {
    ((len as f64 * 0.01).round() as usize).max(1)
}

/// Distance from each index to the nearest covered one (`None` if none is).
fn distance_field(intervals: &[AnomalyInterval], len: usize) -> Vec<Option<usize>> {
    let mut covered = vec![false; len];
    for iv in intervals {
        for c in &mut covered[iv.start..=iv.end] {
            *c = true;
        }
    }
    let mut d: Vec<Option<usize>> = vec![None; len];
    let mut last: Option<usize> = None;
    for t in 0..len {
        if covered[t] {
            last = Some(t);
        }
        d[t] = last.map(|l| t - l);
    }
    let mut next: Option<usize> = None;
    for t in (0..len).rev() {
        if covered[t] {
            next = Some(t);
        }
        if let Some(n) = next {
            let right = n - t;
            d[t] = Some(d[t].map_or(right, |l| l.min(right)));
        }
    }
    d
}

fn mean_affinity(from: &[AnomalyInterval], field: &[Option<usize>], w: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for iv in from {
        for t in iv.start..=iv.end {
            if let Some(d) = field[t] {
                sum += (1.0 - d as f64 / w as f64).max(0.0);
            }
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Affinity precision, recall and F1. Both sets empty scores `(1, 1, 1)`;
/// exactly one empty scores `(0, 0, 0)`.
pub fn affinity_scores(
    pred: &[AnomalyInterval],
    gt: &[AnomalyInterval],
    len: usize,
    w: usize,
) -> Result<AffinityScores> {
    if w < 1 {
        return Err(Error::config("affinity window must be >= 1"));
    }
    let pred = normalize_intervals(pred, len)?;
    let gt = normalize_intervals(gt, len)?;
    let (precision, recall) = match (pred.is_empty(), gt.is_empty()) {
        (true, true) => (1.0, 1.0),
        (true, false) | (false, true) => (0.0, 0.0),
        (false, false) => {
            let to_gt = distance_field(&gt, len);
            let to_pred = distance_field(&pred, len);
            (mean_affinity(&pred, &to_gt, w), mean_affinity(&gt, &to_pred, w))
        }
    };
    Ok(AffinityScores {
        precision,
        recall,
        f1: harmonic(precision, recall),
        window: w,
    })
}

/// Fraction of predictions whose class matches; `None` counts as wrong.
pub fn classification_accuracy(pred: &[Option<AnomalyClass>], gt: &[AnomalyClass]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::input(format!(
            "{} predictions for {} ground-truth instances",
            pred.len(),
            gt.len()
        )));
    }
    if gt.is_empty() {
        return Ok(0.0);
    }
    let correct = pred.iter().zip(gt).filter(|(p, g)| **p == Some(**g)).count();
    Ok(correct as f64 / gt.len() as f64)
}

/// One line of a predictions file: a raw response or pre-parsed fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictionRecord {
    Response {
        id: String,
        response: String,
    },
    Parsed {
        id: String,
        class: String,
        intervals: Vec<[i64; 2]>,
    },
}

/// A prediction reduced to what scoring needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub class: Option<AnomalyClass>,
    /// `None` when the answer was missing or malformed.
    pub intervals: Option<Vec<AnomalyInterval>>,
}

impl From<&PredictionRecord> for Prediction {
    fn from(rec: &PredictionRecord) -> Self {
        match rec {
            PredictionRecord::Response { id, response } => {
                let r = parse_response(response);
                Prediction {
                    id: id.clone(),
                    class: r.class,
                    intervals: r.intervals,
                }
            }
            PredictionRecord::Parsed { id, class, intervals } => {
                let ivs = intervals
                    .iter()
                    .map(|&[s, e]| {
                        (s >= 0 && e >= s).then(|| AnomalyInterval {
                            start: s as usize,
                            end: e as usize,
                        })
                    })
                    .collect();
                Prediction {
                    id: id.clone(),
                    class: AnomalyClass::parse_normalized(class),
                    intervals: ivs,
                }
            }
        }
    }
}

/// Affinity scores of a possibly malformed prediction. Unparseable answers and
/// intervals entirely outside the series score zero.
pub fn score_prediction(
    intervals: Option<&[AnomalyInterval]>,
    gt: &[AnomalyInterval],
    len: usize,
    w: usize,
) -> Result<AffinityScores> {
    let zero = AffinityScores {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        window: w,
    };
    match intervals {
        None => {
            if w < 1 {
                return Err(Error::config("affinity window must be >= 1"));
            }
            Ok(zero)
        }
        Some(p) => match affinity_scores(p, gt, len, w) {
            Err(Error::OutOfBounds(_)) => Ok(zero),
            other => other,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub count: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub instances: usize,
    pub accuracy: f64,
    /// Keyed by class name, only classes present in the ground truth.
    pub per_class: BTreeMap<String, ClassScores>,
    /// Mean of the per-class F1 values.
    pub macro_f1: f64,
    /// Fixed window, or `None` for the per-instance default.
    pub window: Option<usize>,
    /// Ground-truth ids without a prediction, scored as normal with no intervals.
    pub missing: Vec<String>,
}

impl EvalReport {
    /// Aligned plain-text table with six decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>9} {:>9} {:>9} {:>9}",
            "class", "n", "accuracy", "precision", "recall", "f1"
        );
        for (name, s) in &self.per_class {
            let _ = writeln!(
                out,
                "{:<16} {:>6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}",
                name, s.count, s.accuracy, s.precision, s.recall, s.f1
            );
        }
        let _ = writeln!(out, "{:<16} {:>6} {:>9.6}", "overall", self.instances, self.accuracy);
        let _ = writeln!(out, "{:<16} {:>6} {:>9} {:>9} {:>9} {:>9.6}", "macro", "", "", "", "", self.macro_f1);
        out
    }
}

/// Score predictions against ground truth. Every prediction id must exist in
/// the ground truth; instances without a prediction count as normal/empty.
pub fn evaluate(predictions: &[Prediction], gts: &[LabeledInstance], window: Option<usize>) -> Result<EvalReport> {
    if window == Some(0) {
        return Err(Error::config("affinity window must be >= 1"));
    }
    let known: HashMap<&str, usize> = gts.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect();
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if !known.contains_key(p.id.as_str()) {
            return Err(Error::input(format!("prediction id {} not in ground truth", p.id)));
        }
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(Error::input(format!("duplicate prediction id {}", p.id)));
        }
    }

    let empty: Vec<AnomalyInterval> = Vec::new();
    let mut missing = Vec::new();
    let mut classes: Vec<Option<AnomalyClass>> = Vec::with_capacity(gts.len());
    let mut sums: BTreeMap<AnomalyClass, (usize, usize, f64, f64, f64)> = BTreeMap::new();
    for g in gts {
        let (class, intervals) = match by_id.get(g.id.as_str()) {
            Some(p) => (p.class, p.intervals.as_deref()),
            None => {
                missing.push(g.id.clone());
                (Some(AnomalyClass::Normal), Some(empty.as_slice()))
            }
        };
        let w = window.unwrap_or_else(|| default_window(g.len()));
        let s = score_prediction(intervals, &g.intervals, g.len(), w)?;
        let e = sums.entry(g.class).or_default();
        e.0 += 1;
        e.1 += usize::from(class == Some(g.class));
        e.2 += s.precision;
        e.3 += s.recall;
        e.4 += s.f1;
        classes.push(class);
    }
    let gt_classes: Vec<AnomalyClass> = gts.iter().map(|g| g.class).collect();
    let accuracy = classification_accuracy(&classes, &gt_classes)?;
    let per_class: BTreeMap<String, ClassScores> = sums
        .iter()
        .map(|(c, &(n, correct, p, r, f))| {
            let nf = n as f64;
            (
                c.name().to_string(),
                ClassScores {
                    count: n,
                    accuracy: correct as f64 / nf,
                    precision: p / nf,
                    recall: r / nf,
                    f1: f / nf,
                },
            )
        })
        .collect();
    let macro_f1 = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().map(|s| s.f1).sum::<f64>() / per_class.len() as f64
    };
    Ok(EvalReport {
        instances: gts.len(),
        accuracy,
        per_class,
        macro_f1,
        window,
        missing,
    })
}

/// File-level wrapper around [`evaluate`].
pub fn evaluate_dataset(predictions: &Path, ground_truth: &Path, window: Option<usize>) -> Result<EvalReport> {
    let gts = read_instances(ground_truth)?;
    let records: Vec<PredictionRecord> = read_jsonl(predictions)?;
    let preds: Vec<Prediction> = records.iter().map(Prediction::from).collect();
    evaluate(&preds, &gts, window)
}
