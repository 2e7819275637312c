use std::fmt::Write as _;
use std::ops::Range;

use super::LanguageId;

pub type NodeId = usize;

/// One node of a [`SyntaxTree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: &'static str,
    pub named: bool,
    pub field: Option<&'static str>,
    pub children: Vec<NodeId>,
    /// Source text; set on leaves only.
    pub text: Option<String>,
    /// Byte span in the parsed fragment.
    pub span: Range<usize>,
    pub is_error: bool,
    pub is_missing: bool,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A comment-free parse tree over a code fragment.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    language: LanguageId,
    source: String,
    nodes: Vec<Node>,
    wrapped: bool,
}

impl SyntaxTree {
    pub(crate) fn new(language: LanguageId, source: String, nodes: Vec<Node>, wrapped: bool) -> Self {
        debug_assert!(!nodes.is_empty());
        Self { language, source, nodes, wrapped }
    }

    pub fn language(&self) -> LanguageId {
        self.language
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node(self.root()).children.is_empty()
    }

    /// True when the fragment only parsed inside a wrapping shell.
    pub fn is_wrapped(&self) -> bool {
        self.wrapped
    }

    pub fn has_errors(&self) -> bool {
        self.nodes.iter().any(|n| n.is_error || n.is_missing)
    }

    pub fn child_by_field(&self, id: NodeId, field: &str) -> Option<NodeId> {
        self.nodes[id]
            .children
            .iter()
            .copied()
            .find(|&c| self.nodes[c].field == Some(field))
    }

    /// Source slice covered by a node.
    pub fn text_of(&self, id: NodeId) -> &str {
        let span = &self.nodes[id].span;
        self.source.get(span.clone()).unwrap_or("")
    }

    /// Node ids in pre-order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev().copied());
        }
        out
    }

    /// Height of every node; leaves have height 1.
    pub fn heights(&self) -> Vec<usize> {
        let mut heights = vec![1; self.nodes.len()];
        for &id in self.preorder().iter().rev() {
            let h = self.nodes[id]
                .children
                .iter()
                .map(|&c| heights[c])
                .max()
                .map_or(1, |m| m + 1);
            heights[id] = h;
        }
        heights
    }

    /// S-expression of the subtree at `id`, in the same layout tree-sitter
    /// uses: named nodes only, with field labels.
    pub fn sexp_of(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.write_sexp(id, &mut out);
        out
    }

    pub fn to_sexp(&self) -> String {
        self.sexp_of(self.root())
    }

    /// Copy of the tree without the subtrees rooted at nodes matching `drop`.
    /// A node is never emptied: if every child matches, the children stay.
    pub fn pruned(&self, drop: impl Fn(&SyntaxTree, NodeId) -> bool) -> SyntaxTree {
        fn copy(tree: &SyntaxTree, id: NodeId, drop: &dyn Fn(&SyntaxTree, NodeId) -> bool, out: &mut Vec<Node>) -> NodeId {
            let new_id = out.len();
            out.push(Node { children: Vec::new(), ..tree.nodes[id].clone() });
            let all = &tree.nodes[id].children;
            let kept: Vec<NodeId> = all.iter().copied().filter(|&c| !drop(tree, c)).collect();
            let kept = if kept.is_empty() { all.clone() } else { kept };
            let children = kept.into_iter().map(|c| copy(tree, c, drop, out)).collect();
            out[new_id].children = children;
            new_id
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        copy(self, self.root(), &drop, &mut nodes);
        SyntaxTree::new(self.language, self.source.clone(), nodes, self.wrapped)
    }

    fn write_sexp(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[id];
        if node.is_missing {
            if node.named {
                let _ = write!(out, "(MISSING {})", node.kind);
            } else {
                let _ = write!(out, "(MISSING \"{}\")", node.kind.replace('"', "\\\""));
            }
            return;
        }
        out.push('(');
        out.push_str(node.kind);
        for &child in &node.children {
            let c = &self.nodes[child];
            if !(c.named || c.is_missing) {
                continue;
            }
            out.push(' ');
            if let Some(field) = c.field {
                out.push_str(field);
                out.push_str(": ");
            }
            self.write_sexp(child, out);
        }
        out.push(')');
    }
}

/// Structural equality: same shape, same node kinds, same leaf texts.
///
/// Whitespace is never a node and comments were dropped at build time, so
/// formatting differences do not matter.
pub fn trees_equal(a: &SyntaxTree, b: &SyntaxTree) -> bool {
    fn eq(a: &SyntaxTree, x: NodeId, b: &SyntaxTree, y: NodeId) -> bool {
        let (nx, ny) = (a.node(x), b.node(y));
        nx.kind == ny.kind
            && nx.named == ny.named
            && nx.is_missing == ny.is_missing
            && nx.text == ny.text
            && nx.children.len() == ny.children.len()
            && nx
                .children
                .iter()
                .zip(&ny.children)
                .all(|(&cx, &cy)| eq(a, cx, b, cy))
    }
    a.language == b.language && eq(a, a.root(), b, b.root())
}

/// A lexical token of a fragment: a leaf, or a whole string/char literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeToken {
    pub node: NodeId,
    pub kind: &'static str,
    pub text: String,
}

const ATOMIC_KINDS: [&str; 3] = ["string_literal", "string", "character_literal"];

pub(crate) fn is_token(node: &Node) -> bool {
    node.is_leaf() || ATOMIC_KINDS.contains(&node.kind)
}

/// Tokens in source order. String literals stay whole.
pub fn code_tokens(tree: &SyntaxTree) -> Vec<CodeToken> {
    let mut out = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        // an empty root is not a token
        if id == tree.root() && node.is_leaf() {
            continue;
        }
        if is_token(node) {
            out.push(CodeToken {
                node: id,
                kind: node.kind,
                text: tree.text_of(id).to_string(),
            });
        } else {
            stack.extend(node.children.iter().rev().copied());
        }
    }
    out
}

/// Converts tree-sitter nodes into [`Node`]s, dropping comments. Spans are
/// shifted back by `offset` so they index the caller's fragment.
pub(crate) struct Builder<'a> {
    pub language: LanguageId,
    pub source: &'a str,
    pub offset: usize,
}

impl Builder<'_> {
    /// Builds a tree whose root is `root`.
    pub fn from_root(&self, root: tree_sitter::Node<'_>) -> Vec<Node> {
        let mut nodes = Vec::new();
        self.push(root, None, &mut nodes);
        nodes
    }

    /// Builds a tree with a synthetic root adopting `children`.
    pub fn synthetic_root(&self, kind: &'static str, children: &[tree_sitter::Node<'_>], len: usize) -> Vec<Node> {
        let mut nodes = vec![Node {
            kind,
            named: true,
            field: None,
            children: Vec::new(),
            text: None,
            span: 0..len,
            is_error: false,
            is_missing: false,
        }];
        let mut adopted = Vec::new();
        for child in children {
            if self.language.is_comment(child.kind()) {
                continue;
            }
            adopted.push(self.push(*child, None, &mut nodes));
        }
        nodes[0].children = adopted;
        nodes
    }

    fn push(&self, node: tree_sitter::Node<'_>, field: Option<&'static str>, nodes: &mut Vec<Node>) -> NodeId {
        let id = nodes.len();
        let span = node.start_byte().saturating_sub(self.offset)..node.end_byte().saturating_sub(self.offset);
        nodes.push(Node {
            kind: node.kind(),
            named: node.is_named(),
            field,
            children: Vec::new(),
            text: None,
            span: span.clone(),
            is_error: node.is_error(),
            is_missing: node.is_missing(),
        });

        let mut children = Vec::new();
        let mut cursor = node.walk();
        if cursor.goto_first_child() {
            loop {
                let child = cursor.node();
                if !self.language.is_comment(child.kind()) {
                    let field = cursor.field_name();
                    children.push(self.push(child, field, nodes));
                }
                if !cursor.goto_next_sibling() {
                    break;
                }
            }
        }
        if children.is_empty() {
            nodes[id].text = Some(self.source.get(span).unwrap_or("").to_string());
        }
        nodes[id].children = children;
        id
    }
}
