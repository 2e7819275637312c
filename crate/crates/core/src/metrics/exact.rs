use crate::codeparse::{parse, trees_equal, LanguageId};

/// Line endings to LF, then the whole string trimmed. Inner whitespace is kept.
pub fn normalize(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n").trim().to_string()
}

pub fn exact_match(prediction: &str, reference: &str) -> bool {
    normalize(prediction) == normalize(reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntacticMatch {
    pub matched: bool,
    /// Set when either side failed to parse and exact match decided instead.
    pub fallback: bool,
}

pub fn syntactic_match(prediction: &str, reference: &str, language: LanguageId) -> SyntacticMatch {
    let (p, r) = (normalize(prediction), normalize(reference));
    let (tp, tr) = (parse(&p, language), parse(&r, language));
    if tp.has_errors() || tr.has_errors() {
        SyntacticMatch { matched: p == r, fallback: true }
    } else {
        SyntacticMatch { matched: trees_equal(&tp, &tr), fallback: false }
    }
}
