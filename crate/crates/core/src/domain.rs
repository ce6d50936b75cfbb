//! Domain types shared by every stage: series, anomaly intervals, the closed
//! class vocabulary and labeled instances, plus interval/label conversions.
//!
//! Indices are 0-based and intervals are inclusive on both ends.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A regularly sampled univariate series; the index doubles as the timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    /// Requires at least two samples, all finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::input(format!(
                "series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite sample at index {pos}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Inclusive index range `[start, end]`; `start == end` is a single point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnomalyInterval {
    pub start: usize,
    pub end: usize,
}

impl AnomalyInterval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::input(format!("interval start {start} > end {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn point(index: usize) -> Self {
        Self {
            start: index,
            end: index,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn overlaps(&self, other: &AnomalyInterval) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for AnomalyInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

impl Serialize for AnomalyInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AnomalyInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(deserializer)?;
        AnomalyInterval::new(start, end).map_err(serde::de::Error::custom)
    }
}

/// Render a list as `[a, b], [c, d]`.
pub fn format_intervals(intervals: &[AnomalyInterval]) -> String {
    intervals
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Render a list as the bracketed answer form `[[a, b], [c, d]]`.
pub fn format_answer(intervals: &[AnomalyInterval]) -> String {
    format!("[{}]", format_intervals(intervals))
}

/// The closed anomaly vocabulary used in prompts and answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnomalyClass {
    #[serde(rename = "global point")]
    GlobalPoint,
    #[serde(rename = "contextual point")]
    ContextualPoint,
    #[serde(rename = "trend")]
    Trend,
    #[serde(rename = "seasonal")]
    Seasonal,
    #[serde(rename = "shapelet")]
    Shapelet,
    #[serde(rename = "normal")]
    Normal,
}

impl AnomalyClass {
    pub const ALL: [AnomalyClass; 6] = [
        AnomalyClass::GlobalPoint,
        AnomalyClass::ContextualPoint,
        AnomalyClass::Trend,
        AnomalyClass::Seasonal,
        AnomalyClass::Shapelet,
        AnomalyClass::Normal,
    ];

    /// The five anomalous classes, in taxonomy order.
    pub const ANOMALOUS: [AnomalyClass; 5] = [
        AnomalyClass::GlobalPoint,
        AnomalyClass::ContextualPoint,
        AnomalyClass::Trend,
        AnomalyClass::Seasonal,
        AnomalyClass::Shapelet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnomalyClass::GlobalPoint => "global point",
            AnomalyClass::ContextualPoint => "contextual point",
            AnomalyClass::Trend => "trend",
            AnomalyClass::Seasonal => "seasonal",
            AnomalyClass::Shapelet => "shapelet",
            AnomalyClass::Normal => "normal",
        }
    }

    /// Case-insensitive match after trimming and collapsing internal whitespace.
    pub fn parse_normalized(text: &str) -> Option<AnomalyClass> {
        let norm = text
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        AnomalyClass::ALL.into_iter().find(|c| c.name() == norm)
    }

    pub fn is_anomalous(self) -> bool {
        self != AnomalyClass::Normal
    }
}

impl fmt::Display for AnomalyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnomalyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnomalyClass::parse_normalized(s)
            .ok_or_else(|| Error::input(format!("unknown anomaly class {s:?}")))
    }
}

/// Sort, merge overlapping or adjacent intervals and clamp to `[0, len-1]`.
///
/// An interval lying entirely at or beyond `len` is an error.
pub fn normalize_intervals(
    intervals: &[AnomalyInterval],
    len: usize,
) -> Result<Vec<AnomalyInterval>> {
    if len == 0 {
        return Err(Error::OutOfBounds("series length is zero".into()));
    }
    let last = len - 1;
    let mut sorted = Vec::with_capacity(intervals.len());
    for iv in intervals {
        if iv.start > iv.end {
            return Err(Error::input(format!(
                "interval start {} > end {}",
                iv.start, iv.end
            )));
        }
        if iv.start > last {
            return Err(Error::OutOfBounds(format!(
                "interval {iv} lies outside [0, {last}]"
            )));
        }
        sorted.push(AnomalyInterval {
            start: iv.start,
            end: iv.end.min(last),
        });
    }
    sorted.sort_unstable();

    let mut merged: Vec<AnomalyInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match merged.last_mut() {
            Some(cur) if iv.start <= cur.end + 1 => cur.end = cur.end.max(iv.end),
            _ => merged.push(iv),
        }
    }
    Ok(merged)
}

/// Binary labels of length `len`; 1 wherever an interval covers the index.
pub fn intervals_to_labels(intervals: &[AnomalyInterval], len: usize) -> Result<Vec<u8>> {
    let mut labels = vec![0u8; len];
    for iv in normalize_intervals(intervals, len)? {
        labels[iv.start..=iv.end].fill(1);
    }
    Ok(labels)
}

/// Maximal runs of non-zero labels.
pub fn labels_to_intervals(labels: &[u8]) -> Vec<AnomalyInterval> {
    let mut out = Vec::new();
    let mut run_start = None;
    for (t, &l) in labels.iter().enumerate() {
        match (l != 0, run_start) {
            (true, None) => run_start = Some(t),
            (false, Some(s)) => {
                out.push(AnomalyInterval { start: s, end: t - 1 });
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        out.push(AnomalyInterval {
            start: s,
            end: labels.len() - 1,
        });
    }
    out
}

/// Total number of indices covered by already-normalized intervals.
pub fn covered_count(intervals: &[AnomalyInterval]) -> usize {
    intervals.iter().map(AnomalyInterval::len).sum()
}

/// A series with its ground-truth class and localization.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub id: String,
    pub series: TimeSeries,
    pub class: AnomalyClass,
    pub intervals: Vec<AnomalyInterval>,
    pub seed: u64,
}

impl LabeledInstance {
    /// Normalizes the intervals and enforces `class == Normal ⇔ intervals empty`.
    pub fn new(
        id: impl Into<String>,
        series: TimeSeries,
        class: AnomalyClass,
        intervals: &[AnomalyInterval],
        seed: u64,
    ) -> Result<Self> {
        let intervals = normalize_intervals(intervals, series.len())?;
        let id = id.into();
        if (class == AnomalyClass::Normal) != intervals.is_empty() {
            return Err(Error::input(format!(
                "instance {id}: class {class} inconsistent with {} interval(s)",
                intervals.len()
            )));
        }
        Ok(Self {
            id,
            series,
            class,
            intervals,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// Wire form of an instance: one JSONL line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub id: String,
    pub values: Vec<f64>,
    pub class: AnomalyClass,
    pub intervals: Vec<AnomalyInterval>,
    #[serde(default)]
    pub seed: u64,
}

impl From<&LabeledInstance> for InstanceRecord {
    fn from(inst: &LabeledInstance) -> Self {
        InstanceRecord {
            id: inst.id.clone(),
            values: inst.series.values().to_vec(),
            class: inst.class,
            intervals: inst.intervals.clone(),
            seed: inst.seed,
        }
    }
}

impl TryFrom<InstanceRecord> for LabeledInstance {
    type Error = Error;

    fn try_from(rec: InstanceRecord) -> Result<Self> {
        let series = TimeSeries::new(rec.values)?;
        LabeledInstance::new(rec.id, series, rec.class, &rec.intervals, rec.seed)
    }
}

impl Serialize for LabeledInstance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        InstanceRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabeledInstance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = InstanceRecord::deserialize(deserializer)?;
        LabeledInstance::try_from(rec).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(s: usize, e: usize) -> AnomalyInterval {
        AnomalyInterval::new(s, e).unwrap()
    }

    /// Union of covered index sets, re-segmented by scanning.
    fn brute_normalize(intervals: &[AnomalyInterval], len: usize) -> Vec<AnomalyInterval> {
        let mut covered = vec![false; len];
        for i in intervals {
            for t in i.start..=i.end.min(len - 1) {
                covered[t] = true;
            }
        }
        let mut out = Vec::new();
        let mut t = 0;
        while t < len {
            if covered[t] {
                let s = t;
                while t + 1 < len && covered[t + 1] {
                    t += 1;
                }
                out.push(iv(s, t));
            }
            t += 1;
        }
        out
    }

    #[test]
    fn overlap_merges() {
        let got = normalize_intervals(&[iv(5, 10), iv(8, 12)], 100).unwrap();
        assert_eq!(got, vec![iv(5, 12)]);
        assert!(normalize_intervals(&[], 100).unwrap().is_empty());
    }

    #[test]
    fn adjacent_points_fuse() {
        let input = [iv(0, 0), iv(2, 3), iv(1, 1)];
        let got = normalize_intervals(&input, 10).unwrap();
        assert_eq!(got, brute_normalize(&input, 10));
        assert_eq!(got, vec![iv(0, 3)]);
    }

    #[test]
    fn clamps_and_rejects() {
        assert_eq!(normalize_intervals(&[iv(8, 20)], 10).unwrap(), vec![iv(8, 9)]);
        assert!(matches!(
            normalize_intervals(&[iv(10, 12)], 10),
            Err(Error::OutOfBounds(_))
        ));
        assert!(AnomalyInterval::new(3, 2).is_err());
    }

    #[test]
    fn labels_from_intervals() {
        assert_eq!(intervals_to_labels(&[iv(1, 2)], 4).unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(intervals_to_labels(&[], 3).unwrap(), vec![0, 0, 0]);
        assert_eq!(
            intervals_to_labels(&[iv(0, 0), iv(3, 4)], 5).unwrap(),
            vec![1, 0, 0, 1, 1]
        );
    }

    #[test]
    fn intervals_from_labels() {
        assert_eq!(labels_to_intervals(&[0, 1, 1, 0]), vec![iv(1, 2)]);
        assert_eq!(labels_to_intervals(&[1, 1, 1]), vec![iv(0, 2)]);
        assert!(labels_to_intervals(&[0, 0]).is_empty());
    }

    #[test]
    fn class_vocabulary() {
        for c in AnomalyClass::ALL {
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.name()));
            assert_eq!(AnomalyClass::parse_normalized(c.name()), Some(c));
        }
        assert_eq!(
            AnomalyClass::parse_normalized("  Global   Point "),
            Some(AnomalyClass::GlobalPoint)
        );
        assert_eq!(AnomalyClass::parse_normalized("global"), None);
    }

    #[test]
    fn instance_class_consistency() {
        let s = TimeSeries::new(vec![0.0; 10]).unwrap();
        assert!(LabeledInstance::new("a", s.clone(), AnomalyClass::Normal, &[], 0).is_ok());
        assert!(LabeledInstance::new("a", s.clone(), AnomalyClass::Normal, &[iv(1, 2)], 0).is_err());
        assert!(LabeledInstance::new("a", s, AnomalyClass::Trend, &[], 0).is_err());
        assert!(TimeSeries::new(vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn record_json_shape() {
        let s = TimeSeries::new(vec![0.0, 1.5, 0.0]).unwrap();
        let inst = LabeledInstance::new("x1", s, AnomalyClass::GlobalPoint, &[iv(1, 1)], 9).unwrap();
        let json = serde_json::to_string(&inst).unwrap();
        assert_eq!(
            json,
            r#"{"id":"x1","values":[0.0,1.5,0.0],"class":"global point","intervals":[[1,1]],"seed":9}"#
        );
        let back: LabeledInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back, inst);
    }

    fn arb_intervals(len: usize) -> impl Strategy<Value = Vec<AnomalyInterval>> {
        prop::collection::vec((0..len, 0usize..12), 0..8).prop_map(move |v| {
            v.into_iter()
                .map(|(s, w)| AnomalyInterval { start: s, end: s + w })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn roundtrip_and_idempotence(ivs in arb_intervals(64)) {
            let norm = normalize_intervals(&ivs, 64).unwrap();
            prop_assert_eq!(&norm, &brute_normalize(&ivs, 64));
            prop_assert_eq!(&normalize_intervals(&norm, 64).unwrap(), &norm);
            let labels = intervals_to_labels(&ivs, 64).unwrap();
            prop_assert_eq!(labels.len(), 64);
            prop_assert_eq!(labels.iter().map(|&l| l as usize).sum::<usize>(), covered_count(&norm));
            prop_assert_eq!(labels_to_intervals(&labels), norm);
        }

        #[test]
        fn label_vectors_roundtrip(labels in prop::collection::vec(0u8..2, 64)) {
            let ivs = labels_to_intervals(&labels);
            prop_assert_eq!(intervals_to_labels(&ivs, 64).unwrap(), labels);
        }
    }
}
