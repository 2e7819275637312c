use tree_sitter::Parser;

use super::tree::Builder;
use super::{LanguageId, SyntaxTree};

/// A shell the fragment is spliced into when it does not parse on its own.
struct Shell {
    prefix: &'static str,
    suffix: &'static str,
    /// Kind of the node whose children are the fragment's top-level nodes.
    body: &'static str,
}

const JAVA_SHELLS: &[Shell] = &[
    Shell { prefix: "class __Snippet__ {\nvoid __snippet__() {\n", suffix: "\n}\n}", body: "block" },
    Shell { prefix: "class __Snippet__ {\n", suffix: "\n}", body: "class_body" },
];
const PYTHON_SHELLS: &[Shell] = &[Shell { prefix: "if True:\n", suffix: "\n", body: "block" }];
const JAVASCRIPT_SHELLS: &[Shell] = &[
    Shell { prefix: "function __snippet__() {\n", suffix: "\n}", body: "statement_block" },
    Shell { prefix: "class __Snippet__ {\n", suffix: "\n}", body: "class_body" },
];
const C_SHELLS: &[Shell] = &[Shell { prefix: "void __snippet__(void) {\n", suffix: "\n}", body: "compound_statement" }];

fn shells(language: LanguageId) -> &'static [Shell] {
    match language {
        LanguageId::Java => JAVA_SHELLS,
        LanguageId::Python => PYTHON_SHELLS,
        LanguageId::JavaScript => JAVASCRIPT_SHELLS,
        LanguageId::C => C_SHELLS,
    }
}

pub(crate) fn parse_plain(parser: &mut Parser, code: &str, language: LanguageId) -> SyntaxTree {
    let ts = parser.parse(code, None).expect("parser has a language and no timeout");
    let builder = Builder { language, source: code, offset: 0 };
    SyntaxTree::new(language, code.to_string(), builder.from_root(ts.root_node()), false)
}

/// Bare parse first; on errors, the first shell that parses cleanly wins.
/// If none does, the bare (error-carrying) tree is returned.
pub(crate) fn parse_snippet(parser: &mut Parser, code: &str, language: LanguageId) -> SyntaxTree {
    let bare = parse_plain(parser, code, language);
    if !bare.has_errors() {
        return bare;
    }
    shells(language)
        .iter()
        .find_map(|shell| parse_in_shell(parser, code, language, shell))
        .unwrap_or(bare)
}

#[cfg(test)]
pub(crate) fn parse_wrapped_for_test(parser: &mut Parser, code: &str, language: LanguageId) -> SyntaxTree {
    parse_in_shell(parser, code, language, &shells(language)[0]).expect("fragment parses inside the first shell")
}

fn parse_in_shell(parser: &mut Parser, code: &str, language: LanguageId, shell: &Shell) -> Option<SyntaxTree> {
    let wrapped = format!("{}{}{}", shell.prefix, code, shell.suffix);
    let ts = parser.parse(&wrapped, None)?;
    let root = ts.root_node();
    if root.has_error() {
        return None;
    }
    let region = shell.prefix.len()..shell.prefix.len() + code.len();
    let body = find_body(root, shell.body, &region)?;

    let mut cursor = body.walk();
    let inside: Vec<_> = body
        .children(&mut cursor)
        .filter(|c| c.start_byte() >= region.start && c.end_byte() <= region.end)
        .collect();
    let builder = Builder { language, source: code, offset: region.start };
    let nodes = builder.synthetic_root(language.root_kind(), &inside, code.len());
    Some(SyntaxTree::new(language, code.to_string(), nodes, true))
}

/// Walks down from the root towards the fragment until a `body` node is hit.
fn find_body<'t>(
    root: tree_sitter::Node<'t>,
    body: &str,
    region: &std::ops::Range<usize>,
) -> Option<tree_sitter::Node<'t>> {
    let mut current = root;
    loop {
        if current.kind() == body && current.id() != root.id() {
            return Some(current);
        }
        let mut cursor = current.walk();
        let children: Vec<_> = current.named_children(&mut cursor).collect();
        let next = children
            .iter()
            .find(|c| c.kind() == body && c.end_byte() >= region.end)
            .or_else(|| {
                children
                    .iter()
                    .find(|c| c.start_byte() < region.end && c.end_byte() > region.start.saturating_sub(1))
            })
            .copied()?;
        current = next;
    }
}
