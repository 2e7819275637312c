use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::keywords::keywords;
use super::ngram::{bleu, weighted_bleu, NgramParams};
use super::Scalar;
use crate::codeparse::{
    code_tokens, extract_dataflow, strip_docstrings, subtree_signatures, trees_equal, DataFlowGraph, FlowRelation,
    LanguageId, SyntaxTree,
};

/// Where BLEU tokens come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    /// Parse-tree leaves, so formatting does not matter.
    #[default]
    Leaf,
    /// Whitespace split of the raw text.
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Smoothing<T> {
    /// Zero n-gram match counts are replaced by `epsilon`.
    AddEpsilon { epsilon: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuConfig<T> {
    /// Weights of (ngram, weighted_ngram, ast_match, dataflow_match).
    pub weights: [T; 4],
    pub max_order: usize,
    /// Unigram weight of a keyword token in the weighted n-gram term.
    pub keyword_weight: T,
    /// Unigram weight of any other token.
    pub other_weight: T,
    pub smoothing: Smoothing<T>,
    pub tokenizer: TokenizerMode,
    pub ast_min_height: usize,
}

impl<T: Scalar> Default for CodeBleuConfig<T> {
    fn default() -> Self {
        let quarter = T::from_f64(0.25).unwrap();
        Self {
            weights: [quarter; 4],
            max_order: 4,
            keyword_weight: T::one(),
            other_weight: T::from_f64(0.2).unwrap(),
            smoothing: Smoothing::AddEpsilon { epsilon: T::from_f64(0.1).unwrap() },
            tokenizer: TokenizerMode::Leaf,
            ast_min_height: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("weights must be non-negative and sum to 1, got {0}")]
    Weights(String),
    #[error("max n-gram order must be at least 1")]
    MaxOrder,
    #[error("AST minimum subtree height must be at least 1")]
    MinHeight,
    #[error("keyword weights and smoothing epsilon must be positive")]
    NonPositive,
}

impl<T: Scalar> CodeBleuConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let sum = self.weights.iter().fold(T::zero(), |a, &w| a + w);
        let tolerance = T::from_f64(1e-6).unwrap();
        if self.weights.iter().any(|&w| w < T::zero() || !w.is_finite()) || (sum - T::one()).abs() > tolerance {
            return Err(ConfigError::Weights(format!("{:?}", self.weights)));
        }
        if self.max_order == 0 {
            return Err(ConfigError::MaxOrder);
        }
        if self.ast_min_height == 0 {
            return Err(ConfigError::MinHeight);
        }
        let Smoothing::AddEpsilon { epsilon } = self.smoothing;
        if !(self.keyword_weight > T::zero() && self.other_weight > T::zero() && epsilon > T::zero()) {
            return Err(ConfigError::NonPositive);
        }
        Ok(())
    }

    /// Config with the whitespace-split tokenizer.
    pub fn compat(mut self) -> Self {
        self.tokenizer = TokenizerMode::Whitespace;
        self
    }

    fn ngram_params(&self) -> NgramParams<T> {
        let Smoothing::AddEpsilon { epsilon } = self.smoothing;
        NgramParams { max_order: self.max_order, epsilon }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components<T> {
    pub ngram: T,
    pub weighted_ngram: T,
    pub ast_match: T,
    pub dataflow_match: T,
}

impl<T: Scalar> Components<T> {
    pub fn zero() -> Self {
        Self { ngram: T::zero(), weighted_ngram: T::zero(), ast_match: T::zero(), dataflow_match: T::zero() }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.ngram, self.weighted_ngram, self.ast_match, self.dataflow_match]
    }

    pub fn combine(&self, weights: &[T; 4]) -> T {
        self.as_array().iter().zip(weights).fold(T::zero(), |acc, (&c, &w)| acc + c * w)
    }
}

/// A parsed fragment, prepared once and reused for every component.
pub(crate) struct Prepared<'a> {
    pub text: &'a str,
    pub tree: SyntaxTree,
}

fn tokens<'a>(p: &'a Prepared<'_>, mode: TokenizerMode) -> Vec<std::borrow::Cow<'a, str>> {
    match mode {
        TokenizerMode::Whitespace => p.text.split_whitespace().map(Into::into).collect(),
        TokenizerMode::Leaf => code_tokens(&p.tree).into_iter().map(|t| t.text.into()).collect(),
    }
}

/// Share of reference subtree signatures that also occur in the candidate.
pub fn ast_match<T: Scalar>(candidate: &SyntaxTree, reference: &SyntaxTree, min_height: usize) -> T {
    let (candidate, reference) = (strip_docstrings(candidate), strip_docstrings(reference));
    let ref_sigs = subtree_signatures(&reference, min_height);
    if ref_sigs.is_empty() {
        return if trees_equal(&candidate, &reference) { T::one() } else { T::zero() };
    }
    let cand_sigs: HashSet<_> = subtree_signatures(&candidate, min_height).into_iter().collect();
    let hits = ref_sigs.iter().filter(|s| cand_sigs.contains(s)).count();
    T::from_usize(hits).unwrap() / T::from_usize(ref_sigs.len()).unwrap()
}

/// Entries with names replaced by first-appearance indices.
fn normalized(graph: &DataFlowGraph) -> Vec<(usize, FlowRelation, Vec<usize>)> {
    let mut ids: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(graph.entries().len());
    for e in graph.entries() {
        for n in &e.source_names {
            let next = ids.len();
            ids.entry(n).or_insert(next);
        }
        let next = ids.len();
        let var = *ids.entry(&e.name).or_insert(next);
        out.push((var, e.relation, e.source_names.iter().map(|n| ids[n.as_str()]).collect()));
    }
    out
}

/// Share of normalized reference data-flow entries matched one-to-one in
/// the candidate. An empty reference graph scores 1.
pub fn dataflow_match<T: Scalar>(candidate: &SyntaxTree, reference: &SyntaxTree) -> T {
    let language = reference.language();
    let cand = extract_dataflow(&strip_docstrings(candidate), language);
    let refg = extract_dataflow(&strip_docstrings(reference), language);
    let wanted = normalized(&refg);
    if wanted.is_empty() {
        return T::one();
    }
    let mut pool = normalized(&cand);
    let mut hits = 0usize;
    for item in &wanted {
        if let Some(i) = pool.iter().position(|c| c == item) {
            pool.swap_remove(i);
            hits += 1;
        }
    }
    T::from_usize(hits).unwrap() / T::from_usize(wanted.len()).unwrap()
}

pub(crate) fn components<T: Scalar>(
    candidate: &Prepared<'_>,
    reference: &Prepared<'_>,
    language: LanguageId,
    config: &CodeBleuConfig<T>,
) -> Components<T> {
    let cand = tokens(candidate, config.tokenizer);
    let refs = tokens(reference, config.tokenizer);
    let params = config.ngram_params();
    let kw = keywords(language);
    Components {
        ngram: bleu(&cand, &refs, params),
        weighted_ngram: weighted_bleu(&cand, &refs, params, |t| {
            if kw.contains(t) {
                config.keyword_weight
            } else {
                config.other_weight
            }
        }),
        ast_match: ast_match(&candidate.tree, &reference.tree, config.ast_min_height),
        dataflow_match: dataflow_match(&candidate.tree, &reference.tree),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codeparse::parse;

    #[test]
    fn default_config_is_valid() {
        CodeBleuConfig::<f64>::default().validate().unwrap();
        CodeBleuConfig::<f32>::default().validate().unwrap();
        let mut bad = CodeBleuConfig::<f64>::default();
        bad.weights = [0.5, 0.5, 0.5, 0.0];
        assert!(matches!(bad.validate(), Err(ConfigError::Weights(_))));
        let mut bad = CodeBleuConfig::<f64>::default();
        bad.max_order = 0;
        assert_eq!(bad.validate(), Err(ConfigError::MaxOrder));
    }

    // Reference `x = 1; y = x;` normalizes ("1" -> 0, x -> 1, y -> 2) to
    //   (1 cf [0]) (0 cf0 []) (2 cf [1]) (1 cf0 [1])
    // and candidate `x = 1; y = 2;` ("2" -> 2, y -> 3) to
    //   (1 cf [0]) (0 cf0 []) (3 cf [2]) (2 cf0 [])
    // where cf is computedFrom and cf0 comesFrom: two of four match.
    #[test]
    fn dataflow_identity_and_partial() {
        let lang = LanguageId::Java;
        let a = parse("x = 1; y = x;", lang);
        let b = parse("x = 1; y = 2;", lang);
        assert_eq!(dataflow_match::<f64>(&a, &a), 1.0);
        assert_eq!(dataflow_match::<f64>(&b, &a), 0.5);
        let none = parse("return;", lang);
        assert_eq!(dataflow_match::<f64>(&a, &none), 1.0);
    }

    #[test]
    fn ast_match_direction_and_degenerate() {
        let lang = LanguageId::C;
        let small = parse("a = 1;", lang);
        let big = parse("a = 1; b = 2; c = 3;", lang);
        // every reference subtree of `small` except the root occurs in `big`
        let s: f64 = ast_match(&big, &small, 2);
        assert!((s - 2.0 / 3.0).abs() < 1e-12, "{s}");
        let empty = parse("", lang);
        assert_eq!(ast_match::<f64>(&empty, &empty, 2), 1.0);
        assert_eq!(ast_match::<f64>(&small, &empty, 2), 0.0);
    }
}
