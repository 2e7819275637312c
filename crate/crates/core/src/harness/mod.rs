//! Multi-seed experiments: sampling, tuning, generation, evaluation and
//! reporting.
//!
//! A run writes everything under the spec's output directory:
//!
//! ```text
//! result.json                  ExperimentResult (deterministic)
//! timings.json                 wall-clock start/end per seed
//! spec.conf                    the spec in key-value form
//! seed-<s>/manifest.json       {seed, train, val, test}
//! seed-<s>/<template>/predictions.jsonl
//! seed-<s>/<template>/reports.jsonl
//! seed-<s>/state.json          finished seed; reused when the fingerprint matches
//! ```

mod report;
mod run;
mod spec;

pub use report::{compare_runs, emit_report, render_comparison, render_report, Comparison, ComparisonRow, Improvement, ReportLayout};
pub use run::{run_experiment, ExperimentResult, SeedFailure, SeedRow, TemplateResult, PROTOCOL_VERSION};
pub use spec::{parse_fraction, parse_seeds, ExperimentSpec, PLAIN_TEMPLATE};

use crate::backend::BackendError;
use crate::corpus::{LoadError, SamplingError};
use crate::metrics::AggregateError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{} seed(s) failed; partial result written", .0.failed_seeds.len())]
    Incomplete(Box<ExperimentResult>),
    #[error("report layout: {0}")]
    Layout(String),
    #[error("cannot compare runs: {0}")]
    Comparison(String),
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }
}
