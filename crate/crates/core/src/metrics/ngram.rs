//! Sentence-level BLEU and its keyword-weighted variant.
//!
//! Precision of order n is clipped n-gram matches over candidate n-grams.
//! The weighted variant instead measures recall over reference n-grams and,
//! at order 1 only, weights each reference token by whether it is a keyword.
//! Zero precisions are smoothed by adding `epsilon` to the numerator. Only
//! plain BLEU has a brevity penalty; recall already punishes short
//! candidates in the weighted variant.
//!
//! An order for which neither side has any n-gram carries no evidence and is
//! left out, with the remaining orders re-weighted uniformly. Without this,
//! two identical three-token sequences would score below 1.

use std::collections::HashMap;

use super::Scalar;

/// How n-gram counts are turned into one score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramParams<T> {
    pub max_order: usize,
    pub epsilon: T,
}

fn counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    out
}

fn brevity_penalty<T: Scalar>(candidate_len: usize, reference_len: usize) -> T {
    if candidate_len > reference_len {
        T::one()
    } else if candidate_len == 0 {
        T::zero()
    } else {
        let ratio = T::from_usize(reference_len).unwrap() / T::from_usize(candidate_len).unwrap();
        (T::one() - ratio).exp()
    }
}

/// Combines per-order (numerator, denominator, has_ngrams) triples.
fn combine<T: Scalar>(orders: &[(T, T, bool)], bp: T, epsilon: T) -> T {
    let kept: Vec<_> = orders.iter().filter(|o| o.2).collect();
    if kept.is_empty() {
        return T::one();
    }
    if orders[0].2 && orders[0].0 == T::zero() {
        return T::zero();
    }
    let weight = T::one() / T::from_usize(kept.len()).unwrap();
    let log_sum = kept.iter().fold(T::zero(), |acc, &&(num, den, _)| {
        let num = if num == T::zero() { epsilon } else { num };
        acc + weight * (num / den).ln()
    });
    bp * log_sum.exp()
}

/// Smoothed sentence BLEU of `candidate` against `reference`.
pub fn bleu<T: Scalar, S: AsRef<str>>(candidate: &[S], reference: &[S], params: NgramParams<T>) -> T {
    let orders: Vec<(T, T, bool)> = (1..=params.max_order)
        .map(|n| {
            let cand = counts(candidate, n);
            let refc = counts(reference, n);
            let clipped: usize = cand.iter().map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0))).sum();
            let total: usize = cand.values().sum();
            let present = !cand.is_empty() || !refc.is_empty();
            (T::from_usize(clipped).unwrap(), T::from_usize(total.max(1)).unwrap(), present)
        })
        .collect();
    combine(&orders, brevity_penalty(candidate.len(), reference.len()), params.epsilon)
}

/// BLEU variant with keyword-weighted unigram recall.
///
/// `weight_of` gives the weight of a reference token at order 1.
pub fn weighted_bleu<T: Scalar, S: AsRef<str>>(
    candidate: &[S],
    reference: &[S],
    params: NgramParams<T>,
    weight_of: impl Fn(&str) -> T,
) -> T {
    let orders: Vec<(T, T, bool)> = (1..=params.max_order)
        .map(|n| {
            let cand = counts(candidate, n);
            let refc = counts(reference, n);
            let present = !cand.is_empty() || !refc.is_empty();
            let (mut num, mut den) = (T::zero(), T::zero());
            for (gram, &rc) in &refc {
                let clipped = rc.min(cand.get(gram).copied().unwrap_or(0));
                let w = if n == 1 { weight_of(gram[0]) } else { T::one() };
                num = num + T::from_usize(clipped).unwrap() * w;
                den = den + T::from_usize(rc).unwrap() * w;
            }
            // a positive weighted mass is used as is, even below 1, so that
            // identical short sequences still score 1
            (num, if den > T::zero() { den } else { T::one() }, present)
        })
        .collect();
    let bp = if candidate.is_empty() { T::zero() } else { T::one() };
    combine(&orders, bp, params.epsilon)
}
