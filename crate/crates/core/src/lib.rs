//! Expert chain-of-thought traces for time-series anomaly detection, plus the
//! optimal-transport reasoning advantage used to refine group-relative policy
//! optimization.
//!
//! The crate is organised bottom-up:
//!
//! - [`domain`]: series, intervals, anomaly classes and labeled instances.
//! - [`synth`]: deterministic synthetic corpora with injected anomalies.
//! - [`analysis`]: classical probes (k-sigma envelope, smoothed gradients,
//!   periodograms, matrix profile, HBOS) and the hierarchical scan.
//! - [`expcot`]: Observation → Reasoning & Validation → Conclusion traces.
//! - [`timerpo`]: rewards, group normalization, Sinkhorn transport,
//!   orthogonalized advantages and the clipped objective.
//! - [`metrics`]: response parsing, affinity precision/recall and dataset
//!   evaluation.
//! - [`cli`] and [`render`]: the batch front-end.

pub mod analysis;
pub mod cli;
pub mod domain;
mod error;
pub mod expcot;
pub mod io;
pub mod metrics;
pub mod render;
pub mod synth;
pub mod timerpo;

pub use domain::{AnomalyClass, AnomalyInterval, LabeledInstance, TimeSeries};
pub use error::{Error, Result};
