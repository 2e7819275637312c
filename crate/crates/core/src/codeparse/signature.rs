use serde::{Deserialize, Serialize};

use super::SyntaxTree;

/// Canonical text of a subtree: node kinds and field labels, with leaf
/// texts abstracted away to their kinds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(pub String);

/// One signature per subtree of height at least `min_height`, in pre-order.
///
/// The result is a multiset; repeated shapes appear repeatedly.
pub fn subtree_signatures(tree: &SyntaxTree, min_height: usize) -> Vec<Signature> {
    assert!(min_height >= 1, "min_height must be at least 1");
    let heights = tree.heights();
    tree.preorder()
        .into_iter()
        .filter(|&id| heights[id] >= min_height)
        .map(|id| Signature(tree.sexp_of(id)))
        .collect()
}
