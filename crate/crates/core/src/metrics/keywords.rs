use std::collections::HashSet;
use std::sync::OnceLock;

use crate::codeparse::LanguageId;

const JAVA: &str = include_str!("../../data/keywords/java.txt");
const PYTHON: &str = include_str!("../../data/keywords/python.txt");
const JAVASCRIPT: &str = include_str!("../../data/keywords/javascript.txt");
const C: &str = include_str!("../../data/keywords/c.txt");

fn load(raw: &'static str) -> HashSet<&'static str> {
    raw.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

/// Vendored keyword list for `language`.
pub fn keywords(language: LanguageId) -> &'static HashSet<&'static str> {
    static SETS: OnceLock<[HashSet<&'static str>; 4]> = OnceLock::new();
    let sets = SETS.get_or_init(|| [load(JAVA), load(PYTHON), load(JAVASCRIPT), load(C)]);
    match language {
        LanguageId::Java => &sets[0],
        LanguageId::Python => &sets[1],
        LanguageId::JavaScript => &sets[2],
        LanguageId::C => &sets[3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_loaded() {
        assert_eq!(keywords(LanguageId::Java).len(), 50);
        assert_eq!(keywords(LanguageId::Python).len(), 38);
        assert_eq!(keywords(LanguageId::JavaScript).len(), 46);
        assert_eq!(keywords(LanguageId::C).len(), 33);
        assert!(keywords(LanguageId::C).contains("while"));
        assert!(!keywords(LanguageId::Python).contains("while "));
    }
}
