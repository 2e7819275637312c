use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codeparse::LanguageId;

/// Kinds of per-instance domain knowledge a prompt can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeKind {
    RepairAction,
    RepairPattern,
    BugType,
    BuggyNodeAst,
    ErrorMessage,
    AlgorithmTags,
}

impl KnowledgeKind {
    pub const ALL: [KnowledgeKind; 6] = [
        KnowledgeKind::RepairAction,
        KnowledgeKind::RepairPattern,
        KnowledgeKind::BugType,
        KnowledgeKind::BuggyNodeAst,
        KnowledgeKind::ErrorMessage,
        KnowledgeKind::AlgorithmTags,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KnowledgeKind::RepairAction => "repair_action",
            KnowledgeKind::RepairPattern => "repair_pattern",
            KnowledgeKind::BugType => "bug_type",
            KnowledgeKind::BuggyNodeAst => "buggy_node_ast",
            KnowledgeKind::ErrorMessage => "error_message",
            KnowledgeKind::AlgorithmTags => "algorithm_tags",
        }
    }

    /// Human-readable phrase used in prompt text, e.g. "repair action".
    pub fn phrase(self) -> &'static str {
        match self {
            KnowledgeKind::RepairAction => "repair action",
            KnowledgeKind::RepairPattern => "repair pattern",
            KnowledgeKind::BugType => "bug type",
            KnowledgeKind::BuggyNodeAst => "buggy node AST",
            KnowledgeKind::ErrorMessage => "error message",
            KnowledgeKind::AlgorithmTags => "algorithm tags",
        }
    }
}

impl fmt::Display for KnowledgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown knowledge kind `{0}`")]
pub struct UnknownKnowledgeKind(pub String);

impl FromStr for KnowledgeKind {
    type Err = UnknownKnowledgeKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KnowledgeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownKnowledgeKind(s.to_string()))
    }
}

/// One single-hunk bug fix with optional domain knowledge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairInstance {
    pub id: String,
    pub language: LanguageId,
    #[serde(rename = "buggy")]
    pub buggy_code: String,
    #[serde(rename = "fixed")]
    pub fixed_code: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub knowledge: BTreeMap<KnowledgeKind, String>,
    #[serde(default, rename = "dataset", skip_serializing_if = "String::is_empty")]
    pub source_dataset: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("instance `{0}` has empty buggy code")]
    EmptyBuggy(String),
    #[error("instance `{0}` has empty fixed code")]
    EmptyFixed(String),
    #[error("instance id must not be empty")]
    EmptyId,
}

impl RepairInstance {
    pub fn new(id: impl Into<String>, language: LanguageId, buggy: impl Into<String>, fixed: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            language,
            buggy_code: buggy.into(),
            fixed_code: fixed.into(),
            knowledge: BTreeMap::new(),
            source_dataset: String::new(),
        }
    }

    pub fn with_knowledge(mut self, kind: KnowledgeKind, text: impl Into<String>) -> Self {
        self.knowledge.insert(kind, text.into());
        self
    }

    pub fn with_dataset(mut self, dataset: impl Into<String>) -> Self {
        self.source_dataset = dataset.into();
        self
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.id.is_empty() {
            return Err(InstanceError::EmptyId);
        }
        if self.buggy_code.is_empty() {
            return Err(InstanceError::EmptyBuggy(self.id.clone()));
        }
        if self.fixed_code.is_empty() {
            return Err(InstanceError::EmptyFixed(self.id.clone()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in KnowledgeKind::ALL {
            assert_eq!(k.name().parse::<KnowledgeKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("bug".parse::<KnowledgeKind>().is_err());
    }

    #[test]
    fn canonical_json_shape() {
        let inst = RepairInstance::new("a1", LanguageId::Java, "x = 1;", "x = 2;")
            .with_knowledge(KnowledgeKind::BugType, "CHANGE_NUMERAL");
        let json = serde_json::to_string(&inst).unwrap();
        assert_eq!(
            json,
            r#"{"id":"a1","language":"java","buggy":"x = 1;","fixed":"x = 2;","knowledge":{"bug_type":"CHANGE_NUMERAL"}}"#
        );
        let back: RepairInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn validation() {
        assert!(RepairInstance::new("a", LanguageId::C, "x", "y").validate().is_ok());
        assert_eq!(
            RepairInstance::new("a", LanguageId::C, "x", "").validate(),
            Err(InstanceError::EmptyFixed("a".into()))
        );
    }
}
