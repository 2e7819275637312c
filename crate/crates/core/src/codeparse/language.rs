use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The four languages the toolkit parses and scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageId {
    Java,
    Python,
    #[serde(alias = "js")]
    JavaScript,
    C,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language tag `{0}`")]
pub struct UnknownLanguage(pub String);

impl LanguageId {
    pub const ALL: [LanguageId; 4] = [Self::Java, Self::Python, Self::JavaScript, Self::C];

    pub fn name(self) -> &'static str {
        match self {
            Self::Java => "java",
            Self::Python => "python",
            Self::JavaScript => "javascript",
            Self::C => "c",
        }
    }

    pub(crate) fn grammar(self) -> tree_sitter::Language {
        match self {
            Self::Java => tree_sitter_java::LANGUAGE.into(),
            Self::Python => tree_sitter_python::LANGUAGE.into(),
            Self::JavaScript => tree_sitter_javascript::LANGUAGE.into(),
            Self::C => tree_sitter_c::LANGUAGE.into(),
        }
    }

    /// Kind of the grammar's root node.
    pub fn root_kind(self) -> &'static str {
        match self {
            Self::Java | Self::JavaScript => "program",
            Self::Python => "module",
            Self::C => "translation_unit",
        }
    }

    pub(crate) fn is_comment(self, kind: &str) -> bool {
        match self {
            Self::Java => matches!(kind, "line_comment" | "block_comment"),
            Self::Python | Self::JavaScript | Self::C => kind == "comment",
        }
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LanguageId {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "java" => Ok(Self::Java),
            "python" | "py" | "python3" => Ok(Self::Python),
            "javascript" | "js" => Ok(Self::JavaScript),
            "c" => Ok(Self::C),
            _ => Err(UnknownLanguage(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for lang in LanguageId::ALL {
            assert_eq!(lang.name().parse::<LanguageId>().unwrap(), lang);
            let json = serde_json::to_string(&lang).unwrap();
            assert_eq!(json, format!("\"{}\"", lang.name()));
        }
        assert!("cobol".parse::<LanguageId>().is_err());
    }
}
