//! Prevalence-weighted late fusion for multimodal binary screening.
//!
//! Per-mode classifiers (cough, breath, fever, ...) each emit a 0/1 indicator.
//! Indicators are fused into a screening score with weights proportional to
//! how often each symptom is seen in confirmed-positive patients, and the
//! result can be compared against an equal-weight baseline over a labeled
//! dataset.
//!
//! Module map:
//! - [`prevalence`]: study CSV ingestion, per-symptom aggregation, weight derivation
//! - [`fusion`]: weighted and equal-weight fusion of indicator labels
//! - [`classifiers`]: per-mode classifier contract and the shipped rules
//! - [`evaluation`]: case grouping, relative differences, aggregate improvement
//! - [`report`]: table/csv/json rendering of evaluation summaries
//! - [`cli`]: the `prevfuse` command-line surface

pub mod classifiers;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod mode;
pub mod prevalence;
pub mod report;
pub mod rounding;

pub use error::{Error, Result};
pub use mode::{ModeSet, SymptomId};
