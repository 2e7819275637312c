//! Syntax trees for Java, Python, JavaScript and C fragments.
//!
//! Parsing is error-recovering: a malformed fragment still yields a tree, with
//! the damaged regions marked by error or missing nodes. Fragments that do not
//! parse on their own are retried inside a small language-specific shell (a
//! method body, a class body, ...). When a shell is used, its nodes are cut
//! away again and the fragment's top-level nodes are hung under a synthetic
//! root, so callers never see the wrapper.

mod dataflow;
mod language;
mod pool;
mod signature;
mod snippet;
mod tree;

pub use dataflow::{extract_dataflow, DataFlowGraph, FlowEdge, FlowEntry, FlowNode, FlowRelation};
pub use language::{LanguageId, UnknownLanguage};
pub use pool::with_parser;
pub use signature::{subtree_signatures, Signature};
pub use tree::{code_tokens, trees_equal, CodeToken, Node, NodeId, SyntaxTree};

/// Parses `code` in snippet mode using this thread's parser for `language`.
pub fn parse(code: &str, language: LanguageId) -> SyntaxTree {
    with_parser(language, |parser| snippet::parse_snippet(parser, code, language))
}

/// Drops Python docstring-like statements (a statement that is only a string
/// literal). Other languages are returned unchanged.
pub fn strip_docstrings(tree: &SyntaxTree) -> SyntaxTree {
    if tree.language() != LanguageId::Python {
        return tree.clone();
    }
    tree.pruned(|t, id| {
        let node = t.node(id);
        node.kind == "expression_statement"
            && node.children.len() == 1
            && matches!(t.node(node.children[0]).kind, "string" | "concatenated_string")
    })
}

/// Parses `code` as-is, without trying any wrapping shell.
pub fn parse_bare(code: &str, language: LanguageId) -> SyntaxTree {
    with_parser(language, |parser| snippet::parse_plain(parser, code, language))
}
