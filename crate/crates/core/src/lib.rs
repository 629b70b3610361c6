//! Empathy detection from frame-level visual behavior logs.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`ingest`]: parse per-frame face-tracker CSV files into sessions, drop
//!   null/constant columns and group features into five categories.
//! - [`labels`]: questionnaire scoring, Cronbach's alpha and the median split.
//! - [`features`]: fixed-length time-series summaries and 1 Hz resampling.
//! - [`learners`]: binary classifiers behind one fit/predict contract.
//! - [`stats`]: classification metrics and significance tests.
//! - [`harness`]: leakage-free repeated stratified cross-validation.
//! - [`analysis`]: feature rankings, class-conditional curves and subset ablation.
//! - [`synth`]: synthetic sessions with planted class effects.

pub mod analysis;
pub mod error;
pub mod features;
pub mod harness;
pub mod ingest;
pub mod labels;
pub mod learners;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
