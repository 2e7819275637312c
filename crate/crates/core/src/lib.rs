//! Prompt-tuning toolkit for automated program repair.
//!
//! * [`corpus`]: repair instances, dataset adapters, splits and few-shot samples.
//! * [`template`]: prompt template DSL, builtin templates and compilation.
//! * [`codeparse`]: fragment parsing, tree equality, subtree signatures, data flow.
//! * [`metrics`]: exact match, syntactic match, CodeBLEU and aggregation.
//! * [`backend`]: model backends (stub and remote worker) and the wire protocol.
//! * [`harness`]: multi-seed experiments, comparisons and reports.

pub mod backend;
pub mod codeparse;
pub mod corpus;
pub mod template;
mod whole;
pub mod metrics;
pub mod harness;

pub use codeparse::LanguageId;

pub type CodeBleuConfig = metrics::CodeBleuConfig<f64>;
pub type MetricReport = metrics::MetricReport<f64>;
pub type Components = metrics::Components<f64>;
pub type Summary = metrics::Summary<f64>;
pub type CodeBleuConfigF32 = metrics::CodeBleuConfig<f32>;
pub type MetricReportF32 = metrics::MetricReport<f32>;
