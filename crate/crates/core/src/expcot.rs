//! Three-stage expert traces: Observation, Reasoning & Validation, Conclusion.
//!
//! Every number in the prose is rendered from a structured field; the text
//! never carries information the fields lack. The conclusion always restates
//! the ground truth.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    discord_zscores, gradient_exceedances, hierarchical_scan, ksigma_envelope, matrix_profile,
    sliding_period_scan, smoothed_gradient, top_discords, DiscordSegment, PeriodEstimate,
    ScanCandidates, ScanParams, ScanReport, ScanWindows, TopDiscord,
};
use crate::domain::{format_answer, format_intervals, AnomalyClass, AnomalyInterval, LabeledInstance, TimeSeries};
use crate::error::{Error, Result};

/// Number of top subsequence segments reported for shapelet validation.
pub const SHAPELET_SEGMENTS: usize = 3;

/// Compact form of a [`ScanReport`]: the per-point HBOS vector is reduced to
/// its maximum and location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationStats {
    pub mean: f64,
    pub std: f64,
    pub max_abs_z: f64,
    pub hbos_max: f64,
    pub hbos_argmax: usize,
    pub grad_mean: f64,
    pub grad_std: f64,
    pub dominant_period: Option<PeriodEstimate>,
    pub typical_window_period: f64,
    pub top_discord: Option<TopDiscord>,
    pub windows: ScanWindows,
    pub candidates: ScanCandidates,
}

impl From<&ScanReport> for ObservationStats {
    fn from(r: &ScanReport) -> Self {
        let hbos_argmax = r.hbos_argmax().unwrap_or(0);
        ObservationStats {
            mean: r.mean,
            std: r.std,
            max_abs_z: r.max_abs_z,
            hbos_max: r.hbos.get(hbos_argmax).copied().unwrap_or(0.0),
            hbos_argmax,
            grad_mean: r.grad_mean,
            grad_std: r.grad_std,
            dominant_period: r.dominant_period,
            typical_window_period: r.typical_window_period,
            top_discord: r.top_discord,
            windows: r.windows,
            candidates: r.candidates.clone(),
        }
    }
}

/// Output of the single probe matched to the ground-truth class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum ValidationEvidence {
    Envelope {
        k: f64,
        lower: f64,
        upper: f64,
        exceed_count: usize,
        intervals: Vec<AnomalyInterval>,
    },
    Discord {
        m: usize,
        index: usize,
        distance: f64,
        zscore: f64,
        threshold: f64,
        significant: bool,
    },
    Gradient {
        grad_mean: f64,
        grad_std: f64,
        threshold: f64,
        exceed_count: usize,
        intervals: Vec<AnomalyInterval>,
    },
    Period {
        window: usize,
        typical: f64,
        robust_scale: f64,
        lower: f64,
        upper: f64,
        deviating_windows: usize,
        intervals: Vec<AnomalyInterval>,
    },
    Subsequence {
        m: usize,
        segments: Vec<DiscordSegment>,
    },
    /// Normal instances run no probe.
    Null,
}

impl ValidationEvidence {
    /// The class whose probe produces this variant.
    pub fn class(&self) -> AnomalyClass {
        match self {
            ValidationEvidence::Envelope { .. } => AnomalyClass::GlobalPoint,
            ValidationEvidence::Discord { .. } => AnomalyClass::ContextualPoint,
            ValidationEvidence::Gradient { .. } => AnomalyClass::Trend,
            ValidationEvidence::Period { .. } => AnomalyClass::Seasonal,
            ValidationEvidence::Subsequence { .. } => AnomalyClass::Shapelet,
            ValidationEvidence::Null => AnomalyClass::Normal,
        }
    }

    /// Every numeric field, flattened in declaration order (counts and indices
    /// included as floats, interval endpoints as start/end pairs).
    pub fn numerics(&self) -> Vec<f64> {
        let ivs = |v: &[AnomalyInterval]| {
            v.iter()
                .flat_map(|iv| [iv.start as f64, iv.end as f64])
                .collect::<Vec<_>>()
        };
        match self {
            ValidationEvidence::Envelope { k, lower, upper, exceed_count, intervals } => {
                let mut v = vec![*k, *lower, *upper, *exceed_count as f64];
                v.extend(ivs(intervals));
                v
            }
            ValidationEvidence::Discord { m, index, distance, zscore, threshold, .. } => {
                vec![*m as f64, *index as f64, *distance, *zscore, *threshold]
            }
            ValidationEvidence::Gradient { grad_mean, grad_std, threshold, exceed_count, intervals } => {
                let mut v = vec![*grad_mean, *grad_std, *threshold, *exceed_count as f64];
                v.extend(ivs(intervals));
                v
            }
            ValidationEvidence::Period {
                window,
                typical,
                robust_scale,
                lower,
                upper,
                deviating_windows,
                intervals,
            } => {
                let mut v = vec![
                    *window as f64,
                    *typical,
                    *robust_scale,
                    *lower,
                    *upper,
                    *deviating_windows as f64,
                ];
                v.extend(ivs(intervals));
                v
            }
            ValidationEvidence::Subsequence { m, segments } => {
                let mut v = vec![*m as f64];
                v.extend(segments.iter().flat_map(|s| [s.index as f64, s.distance]));
                v
            }
            ValidationEvidence::Null => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub stats: ObservationStats,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub class: AnomalyClass,
    pub evidence: ValidationEvidence,
    /// The probe did not corroborate the ground truth (or could not run).
    pub weak: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub class: AnomalyClass,
    pub intervals: Vec<AnomalyInterval>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpCotTrace {
    pub id: String,
    /// Series length `T`.
    pub length: usize,
    pub observation: Observation,
    pub validation: Validation,
    pub conclusion: Conclusion,
    pub params: ScanParams,
    /// `<think>…</think><answer>…</answer><class>…</class>`.
    pub flat_text: String,
}

/// Compact numeric rendering: three significant figures, trailing zeros
/// trimmed, integers past 1000 shown whole.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (2 - mag).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn fmt_list(ivs: &[AnomalyInterval]) -> String {
    if ivs.is_empty() {
        "none".into()
    } else {
        format_intervals(ivs)
    }
}

fn overlaps_any(a: &[AnomalyInterval], b: &[AnomalyInterval]) -> bool {
    a.iter().any(|x| b.iter().any(|y| x.overlaps(y)))
}

fn observation_text(s: &ObservationStats, params: &ScanParams) -> String {
    let mut global = format!(
        "Global scan: the series has mean μ={} and σ={}, with maximum standardized deviation max|z|={}.",
        fmt_num(s.mean),
        fmt_num(s.std),
        fmt_num(s.max_abs_z)
    );
    if s.max_abs_z > params.k {
        global.push_str(&format!(
            " Values leave the {}σ band at {}, a sign of range outliers.",
            fmt_num(params.k),
            fmt_list(&s.candidates.envelope)
        ));
    } else {
        global.push_str(&format!(
            " There are no extreme global outliers; every value stays within {}σ of the mean.",
            fmt_num(params.k)
        ));
    }
    global.push_str(&format!(
        " The largest histogram outlier score is {} at t={}.",
        fmt_num(s.hbos_max),
        s.hbos_argmax
    ));

    let mut structural = format!(
        "Structural scan: the smoothed gradient (window={}) has mean {} and spread σ_grad={}; steep segments: {}.",
        s.windows.smooth_window,
        fmt_num(s.grad_mean),
        fmt_num(s.grad_std),
        fmt_list(&s.candidates.gradient)
    );
    match s.dominant_period {
        Some(p) => structural.push_str(&format!(
            " The spectrum peaks at period {}, {}× its median power.",
            fmt_num(p.period),
            fmt_num(p.peak_ratio)
        )),
        None => structural.push_str(" The spectrum has no significant periodic peak."),
    }
    structural.push_str(&format!(
        " Sliding windows (W={}) give a typical period of {}; windows off that period: {}.",
        s.windows.period_window,
        fmt_num(s.typical_window_period),
        fmt_list(&s.candidates.period)
    ));

    let pattern = match s.top_discord {
        Some(d) => format!(
            "Pattern scan: the matrix profile (m={}) peaks at i*={} with distance {} and discord z-score={}; {}.",
            s.windows.mp_window,
            d.index,
            fmt_num(d.distance),
            fmt_num(d.zscore),
            if d.significant {
                format!("the discord {} is a candidate", fmt_list(&s.candidates.discord))
            } else {
                "no subsequence is markedly unusual".to_string()
            }
        ),
        None => format!(
            "Pattern scan: the matrix profile (m={}) yields no discord.",
            s.windows.mp_window
        ),
    };
    format!("{global}\n{structural}\n{pattern}")
}

/// Run the hierarchical scan and render the observation paragraphs.
pub fn observe(series: &TimeSeries, params: &ScanParams) -> Result<Observation> {
    let report = hierarchical_scan(series, params)?;
    let stats = ObservationStats::from(&report);
    let text = observation_text(&stats, params);
    Ok(Observation { stats, text })
}

/// Run the probe matched to the instance's class. Probe failures become weak
/// evidence rather than errors.
pub fn validate(instance: &LabeledInstance, params: &ScanParams) -> Result<Validation> {
    params.validate()?;
    let x = instance.series.values();
    let gt = &instance.intervals;
    let class = instance.class;
    let probe: Result<(ValidationEvidence, bool)> = match class {
        AnomalyClass::Normal => Ok((ValidationEvidence::Null, false)),
        AnomalyClass::GlobalPoint => ksigma_envelope(x, params.k).map(|e| {
            let weak = !overlaps_any(&e.intervals, gt);
            (
                ValidationEvidence::Envelope {
                    k: e.k,
                    lower: e.lower,
                    upper: e.upper,
                    exceed_count: e.exceed_count,
                    intervals: e.intervals,
                },
                weak,
            )
        }),
        AnomalyClass::ContextualPoint => matrix_profile(x, params.mp_window)
            .and_then(|mp| discord_zscores(&mp.profile, params.discord_threshold))
            .map(|d| {
                let m = params.mp_window;
                let near = gt
                    .iter()
                    .any(|g| d.index + m > g.start && d.index <= g.end + m);
                (
                    ValidationEvidence::Discord {
                        m,
                        index: d.index,
                        distance: d.distance,
                        zscore: d.zscore,
                        threshold: d.threshold,
                        significant: d.significant,
                    },
                    !(d.significant && near),
                )
            }),
        AnomalyClass::Trend => smoothed_gradient(x, params.smooth_window).and_then(|g| {
            gradient_exceedances(&g, params.k).map(|e| {
                let weak = !(g.std > 0.0) || !overlaps_any(&e.intervals, gt);
                (
                    ValidationEvidence::Gradient {
                        grad_mean: g.mean,
                        grad_std: g.std,
                        threshold: e.threshold,
                        exceed_count: e.exceed_count,
                        intervals: e.intervals,
                    },
                    weak,
                )
            })
        }),
        AnomalyClass::Seasonal => sliding_period_scan(
            x,
            params.period_window,
            params.period_stride,
            params.k_band,
            params.peak_ratio,
        )
        .map(|s| {
            let weak = !overlaps_any(&s.intervals, gt);
            (
                ValidationEvidence::Period {
                    window: s.window,
                    typical: s.typical,
                    robust_scale: s.robust_scale,
                    lower: s.lower,
                    upper: s.upper,
                    deviating_windows: s.deviating_windows,
                    intervals: s.intervals,
                },
                weak,
            )
        }),
        AnomalyClass::Shapelet => matrix_profile(x, params.mp_window).map(|mp| {
            let m = params.mp_window;
            let segments = top_discords(&mp, SHAPELET_SEGMENTS);
            let spans: Vec<AnomalyInterval> = segments
                .iter()
                .map(|s| AnomalyInterval { start: s.index, end: s.index + m - 1 })
                .collect();
            let weak = !overlaps_any(&spans, gt);
            (ValidationEvidence::Subsequence { m, segments }, weak)
        }),
    };
    let (evidence, weak) = match probe {
        Ok(v) => v,
        // a probe that cannot run on this series leaves the GT unsupported
        Err(Error::Config(_)) => (ValidationEvidence::Null, class.is_anomalous()),
        Err(e) => return Err(e),
    };
    let text = validation_text(class, &evidence, weak);
    Ok(Validation {
        class,
        evidence,
        weak,
        text,
    })
}

fn validation_text(class: AnomalyClass, ev: &ValidationEvidence, weak: bool) -> String {
    let body = match ev {
        ValidationEvidence::Envelope { k, lower, upper, exceed_count, intervals } => {
            if *exceed_count > 0 {
                format!(
                    "A k-sigma envelope with k={} gives bounds [{}, {}]; {} points exceed the boundaries, grouped as {}.",
                    fmt_num(*k),
                    fmt_num(*lower),
                    fmt_num(*upper),
                    exceed_count,
                    fmt_list(intervals)
                )
            } else {
                format!(
                    "A k-sigma envelope with k={} gives bounds [{}, {}]; no point exceeds the boundaries.",
                    fmt_num(*k),
                    fmt_num(*lower),
                    fmt_num(*upper)
                )
            }
        }
        ValidationEvidence::Discord { m, index, distance, zscore, threshold, significant } => {
            format!(
                "The matrix profile with m={} places the top discord at i*={} (distance {}); its z-score={} {} the {} threshold.",
                m,
                index,
                fmt_num(*distance),
                fmt_num(*zscore),
                if *significant { "exceeds" } else { "does not exceed" },
                fmt_num(*threshold)
            )
        }
        ValidationEvidence::Gradient { grad_mean, grad_std, threshold, exceed_count, intervals } => {
            format!(
                "The smoothed gradient has baseline {} ± {}; {} steps exceed the k-σ gradient threshold (±{}), merged into {}.",
                fmt_num(*grad_mean),
                fmt_num(*grad_std),
                exceed_count,
                fmt_num(*threshold),
                fmt_list(intervals)
            )
        }
        ValidationEvidence::Period {
            window,
            typical,
            robust_scale,
            lower,
            upper,
            deviating_windows,
            intervals,
        } => {
            format!(
                "Sliding period analysis (W={}) finds a typical period of {} with robust scale {} and tolerance band [{}, {}]; {} windows lie beyond it, covering {}.",
                window,
                fmt_num(*typical),
                fmt_num(*robust_scale),
                fmt_num(*lower),
                fmt_num(*upper),
                deviating_windows,
                fmt_list(intervals)
            )
        }
        ValidationEvidence::Subsequence { m, segments } => {
            let ranked = segments
                .iter()
                .map(|s| format!("[{}, {}] (distance {})", s.index, s.index + m - 1, fmt_num(s.distance)))
                .collect::<Vec<_>>()
                .join(", ");
            format!(
                "A subsequence dissimilarity scan with m={} ranks the least typical segments as {}.",
                m,
                if ranked.is_empty() { "none".to_string() } else { ranked }
            )
        }
        ValidationEvidence::Null => {
            if class.is_anomalous() {
                "The matched probe cannot run on this series.".to_string()
            } else {
                "No anomaly is labeled, so no class-specific probe applies.".to_string()
            }
        }
    };
    let head = if class.is_anomalous() {
        format!("Validation ({class}): ")
    } else {
        "Validation: ".to_string()
    };
    let tail = if weak {
        " This evidence is weak relative to the labeled region."
    } else {
        ""
    };
    format!("{head}{body}{tail}")
}

/// Restate the ground truth as the final answer.
pub fn conclude(instance: &LabeledInstance) -> Conclusion {
    let text = if instance.class.is_anomalous() {
        format!(
            "Therefore, the detected anomaly is classified as {}, precisely localized to {}.",
            instance.class,
            format_intervals(&instance.intervals)
        )
    } else {
        "Therefore, no anomaly is detected and the series is classified as normal.".to_string()
    };
    Conclusion {
        class: instance.class,
        intervals: instance.intervals.clone(),
        text,
    }
}

/// The tagged single-string form of a trace.
pub fn flat_text(observation: &Observation, validation: &Validation, conclusion: &Conclusion) -> String {
    format!(
        "<think>\n{}\n{}\n{}\n</think>\n<answer>{}</answer>\n<class>{}</class>",
        observation.text,
        validation.text,
        conclusion.text,
        format_answer(&conclusion.intervals),
        conclusion.class
    )
}

pub fn generate_expcot(instance: &LabeledInstance, params: &ScanParams) -> Result<ExpCotTrace> {
    let observation = observe(&instance.series, params)?;
    let validation = validate(instance, params)?;
    let conclusion = conclude(instance);
    let flat_text = flat_text(&observation, &validation, &conclusion);
    Ok(ExpCotTrace {
        id: instance.id.clone(),
        length: instance.len(),
        observation,
        validation,
        conclusion,
        params: params.clone(),
        flat_text,
    })
}

/// Result of re-checking a trace against its instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    /// Largest absolute difference between trace numerics and a fresh run.
    pub max_deviation: f64,
    pub conclusion_matches: bool,
    pub stages_ordered: bool,
}

impl AuditResult {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_deviation <= tol && self.conclusion_matches && self.stages_ordered
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |m, (x, y)| {
        if x == y {
            m
        } else {
            m.max((x - y).abs())
        }
    })
}

/// Recompute observation and evidence numerics from the instance and compare.
pub fn audit(trace: &ExpCotTrace, instance: &LabeledInstance) -> Result<AuditResult> {
    let fresh = observe(&instance.series, &trace.params)?.stats;
    let s = &trace.observation.stats;
    let obs_a = [s.mean, s.std, s.max_abs_z, s.hbos_max, s.grad_mean, s.grad_std, s.typical_window_period];
    let obs_b = [
        fresh.mean,
        fresh.std,
        fresh.max_abs_z,
        fresh.hbos_max,
        fresh.grad_mean,
        fresh.grad_std,
        fresh.typical_window_period,
    ];
    let mut dev = max_abs_diff(&obs_a, &obs_b);
    if s.candidates != fresh.candidates || s.hbos_argmax != fresh.hbos_argmax {
        dev = f64::INFINITY;
    }
    let ev = validate(instance, &trace.params)?.evidence;
    if ev.class() != trace.validation.evidence.class() {
        dev = f64::INFINITY;
    } else {
        dev = dev.max(max_abs_diff(&ev.numerics(), &trace.validation.evidence.numerics()));
    }
    let conclusion_matches = trace.conclusion.class == instance.class
        && trace.conclusion.intervals == instance.intervals
        && trace.length == instance.len();
    let f = &trace.flat_text;
    let positions = [
        f.find(&trace.observation.text),
        f.find(&trace.validation.text),
        f.find(&trace.conclusion.text),
    ];
    let stages_ordered = match positions {
        [Some(a), Some(b), Some(c)] => a < b && b < c,
        _ => false,
    };
    Ok(AuditResult {
        max_deviation: dev,
        conclusion_matches,
        stages_ordered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_instance, BaseSignalConfig, InjectionConfig};

    fn instance(class: AnomalyClass, seed: u64) -> LabeledInstance {
        generate_instance(
            format!("t-{seed}"),
            &BaseSignalConfig::default(),
            &InjectionConfig::default_for(class),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.002), "0.002");
        assert_eq!(fmt_num(0.098), "0.098");
        assert_eq!(fmt_num(6.7312), "6.73");
        assert_eq!(fmt_num(-0.2920001), "-0.292");
        assert_eq!(fmt_num(50.0), "50");
        assert_eq!(fmt_num(35.8), "35.8");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0001), "-0.0001");
        assert_eq!(fmt_num(1234.6), "1235");
    }

    #[test]
    fn observation_template_slots() {
        let stats = ObservationStats {
            mean: 0.002,
            std: 0.098,
            max_abs_z: 6.73,
            hbos_max: 4.1,
            hbos_argmax: 12,
            grad_mean: -0.0002,
            grad_std: 0.0078,
            dominant_period: Some(PeriodEstimate { period: 50.0, peak_ratio: 40.0 }),
            typical_window_period: 50.2,
            top_discord: None,
            windows: ScanWindows { smooth_window: 21, mp_window: 50, period_window: 120 },
            candidates: ScanCandidates::default(),
        };
        let text = observation_text(&stats, &ScanParams::default());
        assert!(text.contains("mean μ=0.002"));
        assert!(text.contains("σ=0.098"));
        assert!(text.contains("max|z|=6.73"));
        assert!(text.contains("peaks at period 50"));
    }

    #[test]
    fn constant_series_has_no_global_outliers() {
        let s = TimeSeries::new(vec![1.5; 400]).unwrap();
        let obs = observe(&s, &ScanParams::default()).unwrap();
        assert!(obs.text.contains("no extreme global outliers"));
        assert_eq!(obs.stats.max_abs_z, 0.0);
    }

    #[test]
    fn flat_trend_is_weak_but_keeps_gt() {
        let s = TimeSeries::new(vec![0.0; 400]).unwrap();
        let inst = LabeledInstance::new(
            "flat",
            s,
            AnomalyClass::Trend,
            &[AnomalyInterval { start: 100, end: 140 }],
            0,
        )
        .unwrap();
        let trace = generate_expcot(&inst, &ScanParams::default()).unwrap();
        assert!(trace.validation.weak);
        assert_eq!(trace.conclusion.class, AnomalyClass::Trend);
        assert_eq!(trace.conclusion.intervals, inst.intervals);
    }

    #[test]
    fn conclusion_wording() {
        let values = (0..1000).map(|t| (t as f64 / 8.0).sin()).collect();
        let inst = LabeledInstance::new(
            "c",
            TimeSeries::new(values).unwrap(),
            AnomalyClass::ContextualPoint,
            &[AnomalyInterval { start: 897, end: 902 }],
            0,
        )
        .unwrap();
        let c = conclude(&inst);
        assert!(c
            .text
            .contains("classified as contextual point, precisely localized to [897, 902]"));
    }

    #[test]
    fn traces_are_faithful_and_deterministic() {
        for class in AnomalyClass::ALL {
            let inst = instance(class, 11);
            let a = generate_expcot(&inst, &ScanParams::default()).unwrap();
            let b = generate_expcot(&inst, &ScanParams::default()).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            assert_eq!(a.validation.evidence.class(), class);
            let audit = audit(&a, &inst).unwrap();
            assert!(audit.passed(1e-6), "{class}: {audit:?}");
        }
    }

    #[test]
    fn global_point_counts_exceedances() {
        let inst = instance(AnomalyClass::GlobalPoint, 3);
        let v = validate(&inst, &ScanParams::default()).unwrap();
        match &v.evidence {
            ValidationEvidence::Envelope { exceed_count, .. } => {
                let covered: usize = inst.intervals.iter().map(|i| i.len()).sum();
                assert_eq!(*exceed_count, covered);
                assert!(v.text.contains(&format!("{exceed_count} points exceed the boundaries")));
            }
            other => panic!("unexpected evidence {other:?}"),
        }
        assert!(!v.weak);
    }

    #[test]
    fn contextual_text_reports_zscore() {
        let inst = instance(AnomalyClass::ContextualPoint, 5);
        let v = validate(&inst, &ScanParams::default()).unwrap();
        if let ValidationEvidence::Discord { zscore, .. } = v.evidence {
            assert!(v.text.contains(&format!("z-score={}", fmt_num(zscore))));
            assert!(v.text.contains("threshold"));
        } else {
            panic!("wrong evidence");
        }
    }
}
