//! Exact match, syntactic match and CodeBLEU for repair candidates.
//!
//! CodeBLEU is the weighted sum of four components:
//!
//! * `ngram`: smoothed sentence BLEU over code tokens,
//! * `weighted_ngram`: the same with keyword tokens weighted up at order 1,
//! * `ast_match`: the share of reference subtree signatures found in the
//!   candidate,
//! * `dataflow_match`: the share of normalized reference def-use entries
//!   found in the candidate.
//!
//! Tokens come from parse-tree leaves by default, so BLEU does not move when
//! only formatting changes; [`TokenizerMode::Whitespace`] restores the plain
//! whitespace split.
//!
//! ```
//! use patchbench::codeparse::LanguageId;
//! use patchbench::metrics::{evaluate, CodeBleuConfig};
//!
//! let config = CodeBleuConfig::<f64>::default();
//! let r = evaluate("t1", "return a + b;", "return a + b;", LanguageId::Java, &config);
//! assert!(r.em && r.sc);
//! assert_eq!(r.codebleu, 1.0);
//! ```

mod aggregate;
mod codebleu;
mod exact;
mod keywords;
mod ngram;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, cross_seed_mean, AggregateError, AggregateMode, Scores, SeedSummary, Summary};
pub use codebleu::{ast_match, dataflow_match, CodeBleuConfig, Components, ConfigError, Smoothing, TokenizerMode};
pub use exact::{exact_match, normalize, syntactic_match, SyntacticMatch};
pub use keywords::keywords;
pub use ngram::{bleu, weighted_bleu, NgramParams};

use crate::codeparse::{parse, trees_equal, LanguageId};
use codebleu::{components, Prepared};

/// Floating-point type the metric arithmetic runs in.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static> Scalar for T {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<T> {
    pub instance_id: String,
    pub em: bool,
    pub sc: bool,
    pub codebleu: T,
    pub components: Components<T>,
    /// Either side had parse errors; SC fell back to exact match and the
    /// tree-based components ran on error-recovered trees.
    pub parse_fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One line of a batch evaluation input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub language: LanguageId,
    pub prediction: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Scores one prediction against its reference.
///
/// An empty prediction scores zero everywhere, with `em` and `sc` false.
pub fn evaluate<T: Scalar>(
    instance_id: &str,
    prediction: &str,
    reference: &str,
    language: LanguageId,
    config: &CodeBleuConfig<T>,
) -> MetricReport<T> {
    let (p, r) = (normalize(prediction), normalize(reference));
    if p.is_empty() {
        return MetricReport {
            instance_id: instance_id.to_string(),
            em: false,
            sc: false,
            codebleu: T::zero(),
            components: Components::zero(),
            parse_fallback: false,
            seed: None,
        };
    }
    let em = p == r;
    let cand = Prepared { text: &p, tree: parse(&p, language) };
    let refp = Prepared { text: &r, tree: parse(&r, language) };
    let fallback = cand.tree.has_errors() || refp.tree.has_errors();
    let sc = if fallback { em } else { trees_equal(&cand.tree, &refp.tree) };
    let components = components(&cand, &refp, language, config);
    MetricReport {
        instance_id: instance_id.to_string(),
        em,
        sc,
        codebleu: components.combine(&config.weights),
        components,
        parse_fallback: fallback,
        seed: None,
    }
}

/// Scores a batch in parallel; output order follows input order.
pub fn evaluate_batch<T: Scalar>(items: &[EvalItem], config: &CodeBleuConfig<T>) -> Vec<MetricReport<T>> {
    items
        .par_iter()
        .map(|item| MetricReport {
            seed: item.seed,
            ..evaluate(&item.id, &item.prediction, &item.reference, item.language, config)
        })
        .collect()
}
