//! JSONL loading for the canonical instance format and dataset exports.
//!
//! Each schema reads one JSON object per line. Blank lines are skipped; line
//! numbers in errors count from 1 and include blank lines.
//!
//! Field maps (`a.b` is a nested field, lists are joined with ", "):
//!
//! | schema            | id                                        | language                  | buggy              | fixed              | knowledge |
//! |-------------------|-------------------------------------------|---------------------------|--------------------|--------------------|-----------|
//! | `canonical`       | `id`                                      | `language`                | `buggy`            | `fixed`            | `knowledge` object |
//! | `defects4j`       | `project`-`bug_id` (or `bug_id`)          | java                      | `buggy`            | `fix`              | `repair_actions` → repair_action, `repair_patterns` → repair_pattern |
//! | `manysstubs4j`    | `projectName`:`fixCommitSHA1`:`bugLineNum`| java                      | `sourceBeforeFix`  | `sourceAfterFix`   | `bugType` → bug_type, `bugNodeAST` → buggy_node_ast |
//! | `tfix`            | `id` (or `tfix-<line>`)                   | javascript                | `source_code`      | `target_code`      | `linter_report.rule_id` → bug_type, `linter_report.message` → error_message |
//! | `xcodeeval`       | `bug_code_uid` (or `xce-<line>`)          | `lang` (e.g. "Python 3")  | `bug_source_code`  | `fix_source_code`  | `bug_exec_outcome` → error_message, `tags` → algorithm_tags |
//! | `bugsinpy`        | `project`-`bug_id`                        | python                    | `buggy`            | `fixed`            | none |
//! | `code_refinement` | `id` (or `cr-<line>`)                     | java                      | `buggy`            | `fixed`            | none |
//!
//! Exports other than `canonical` set `dataset` to the schema name.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use super::{KnowledgeKind, RepairInstance};
use crate::codeparse::LanguageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSchema {
    Canonical,
    Defects4j,
    Manysstubs4j,
    Tfix,
    Xcodeeval,
    Bugsinpy,
    CodeRefinement,
}

impl DatasetSchema {
    pub const ALL: [DatasetSchema; 7] = [
        Self::Canonical,
        Self::Defects4j,
        Self::Manysstubs4j,
        Self::Tfix,
        Self::Xcodeeval,
        Self::Bugsinpy,
        Self::CodeRefinement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Canonical => "canonical",
            Self::Defects4j => "defects4j",
            Self::Manysstubs4j => "manysstubs4j",
            Self::Tfix => "tfix",
            Self::Xcodeeval => "xcodeeval",
            Self::Bugsinpy => "bugsinpy",
            Self::CodeRefinement => "code_refinement",
        }
    }
}

impl fmt::Display for DatasetSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetSchema {
    type Err = LoadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(LoadError::UnknownSchema(s))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("line {line}: unknown language tag `{tag}`")]
    Language { line: usize, tag: String },
    #[error("unknown dataset schema `{0}`")]
    UnknownSchema(String),
}

impl LoadError {
    /// Line the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Json { line, .. } | Self::Record { line, .. } | Self::Language { line, .. } => Some(*line),
            _ => None,
        }
    }
}

pub fn load_dataset(path: &Path, schema: DatasetSchema) -> Result<Vec<RepairInstance>, LoadError> {
    let io = |source| LoadError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    read_dataset(std::io::BufReader::new(file), schema).map_err(|e| match e {
        LoadError::Io { source, .. } => io(source),
        other => other,
    })
}

pub fn read_dataset(reader: impl BufRead, schema: DatasetSchema) -> Result<Vec<RepairInstance>, LoadError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| LoadError::Io { path: String::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| LoadError::Json { line: line_no, message: e.to_string() })?;
        let Value::Object(obj) = value else {
            return Err(LoadError::Record { line: line_no, message: "record is not a JSON object".into() });
        };
        out.push(Record { obj: &obj, line: line_no }.convert(schema)?);
    }
    Ok(out)
}

/// Writes instances in the canonical format, one per line.
pub fn write_canonical(instances: &[RepairInstance], mut out: impl std::io::Write) -> std::io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut out, inst)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

struct Record<'a> {
    obj: &'a Map<String, Value>,
    line: usize,
}

impl Record<'_> {
    fn err(&self, message: impl Into<String>) -> LoadError {
        LoadError::Record { line: self.line, message: message.into() }
    }

    fn get(&self, path: &str) -> Option<&Value> {
        let mut parts = path.split('.');
        let mut cur = self.obj.get(parts.next()?)?;
        for p in parts {
            cur = cur.get(p)?;
        }
        (!cur.is_null()).then_some(cur)
    }

    /// Scalar or list field as text.
    fn text(&self, path: &str) -> Result<Option<String>, LoadError> {
        let Some(v) = self.get(path) else { return Ok(None) };
        let scalar = |v: &Value| match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            Value::Bool(b) => Some(b.to_string()),
            _ => None,
        };
        let text = match v {
            Value::Array(items) => items.iter().map(scalar).collect::<Option<Vec<_>>>().map(|v| v.join(", ")),
            other => scalar(other),
        };
        text.map(Some).ok_or_else(|| self.err(format!("field `{path}` has an unsupported type")))
    }

    fn required(&self, path: &str) -> Result<String, LoadError> {
        self.text(path)?.ok_or_else(|| self.err(format!("missing field `{path}`")))
    }

    fn language(&self, path: &str) -> Result<LanguageId, LoadError> {
        let tag = self.required(path)?;
        parse_language(&tag).ok_or(LoadError::Language { line: self.line, tag })
    }

    fn knowledge(&self, inst: &mut RepairInstance, path: &str, kind: KnowledgeKind) -> Result<(), LoadError> {
        if let Some(text) = self.text(path)?.filter(|t| !t.is_empty()) {
            inst.knowledge.insert(kind, text);
        }
        Ok(())
    }

    fn joined_id(&self, parts: &[&str], sep: &str) -> Result<String, LoadError> {
        Ok(parts.iter().map(|p| self.required(p)).collect::<Result<Vec<_>, _>>()?.join(sep))
    }

    fn convert(&self, schema: DatasetSchema) -> Result<RepairInstance, LoadError> {
        use DatasetSchema::*;
        use KnowledgeKind::*;
        let fallback_id = |prefix: &str| -> Result<String, LoadError> {
            Ok(self.text("id")?.unwrap_or_else(|| format!("{prefix}-{}", self.line)))
        };
        let mut inst = match schema {
            Canonical => {
                let mut inst = RepairInstance::new(
                    self.required("id")?,
                    self.language("language")?,
                    self.required("buggy")?,
                    self.required("fixed")?,
                );
                if let Some(k) = self.get("knowledge") {
                    let Value::Object(map) = k else { return Err(self.err("`knowledge` must be an object")) };
                    for (name, v) in map {
                        let kind: KnowledgeKind = name.parse().map_err(|e| self.err(format!("{e}")))?;
                        let Value::String(text) = v else {
                            return Err(self.err(format!("knowledge `{name}` must be a string")));
                        };
                        inst.knowledge.insert(kind, text.clone());
                    }
                }
                inst.source_dataset = self.text("dataset")?.unwrap_or_default();
                inst
            }
            Defects4j => {
                let id = match self.text("project")? {
                    Some(p) => format!("{p}-{}", self.required("bug_id")?),
                    None => self.required("bug_id")?,
                };
                let mut inst = RepairInstance::new(id, LanguageId::Java, self.required("buggy")?, self.required("fix")?);
                self.knowledge(&mut inst, "repair_actions", RepairAction)?;
                self.knowledge(&mut inst, "repair_patterns", RepairPattern)?;
                inst
            }
            Manysstubs4j => {
                let id = self.joined_id(&["projectName", "fixCommitSHA1", "bugLineNum"], ":")?;
                let mut inst = RepairInstance::new(
                    id,
                    LanguageId::Java,
                    self.required("sourceBeforeFix")?,
                    self.required("sourceAfterFix")?,
                );
                self.knowledge(&mut inst, "bugType", BugType)?;
                self.knowledge(&mut inst, "bugNodeAST", BuggyNodeAst)?;
                inst
            }
            Tfix => {
                let mut inst = RepairInstance::new(
                    fallback_id("tfix")?,
                    LanguageId::JavaScript,
                    self.required("source_code")?,
                    self.required("target_code")?,
                );
                self.knowledge(&mut inst, "linter_report.rule_id", BugType)?;
                self.knowledge(&mut inst, "linter_report.message", ErrorMessage)?;
                inst
            }
            Xcodeeval => {
                let id = match self.text("bug_code_uid")? {
                    Some(id) => id,
                    None => format!("xce-{}", self.line),
                };
                let mut inst = RepairInstance::new(
                    id,
                    self.language("lang")?,
                    self.required("bug_source_code")?,
                    self.required("fix_source_code")?,
                );
                self.knowledge(&mut inst, "bug_exec_outcome", ErrorMessage)?;
                self.knowledge(&mut inst, "tags", AlgorithmTags)?;
                inst
            }
            Bugsinpy => RepairInstance::new(
                self.joined_id(&["project", "bug_id"], "-")?,
                LanguageId::Python,
                self.required("buggy")?,
                self.required("fixed")?,
            ),
            CodeRefinement => RepairInstance::new(
                fallback_id("cr")?,
                LanguageId::Java,
                self.required("buggy")?,
                self.required("fixed")?,
            ),
        };
        if schema != Canonical {
            inst.source_dataset = schema.name().to_string();
        }
        inst.validate().map_err(|e| self.err(e.to_string()))?;
        Ok(inst)
    }
}

/// Language tags as found in exports: plain names plus compiler labels such
/// as "Python 3", "GNU C11" or "Java 8".
pub fn parse_language(tag: &str) -> Option<LanguageId> {
    if let Ok(lang) = tag.parse() {
        return Some(lang);
    }
    let lower = tag.trim().to_ascii_lowercase();
    let head = lower.split(|c: char| c.is_whitespace() || c.is_ascii_digit()).find(|s| !s.is_empty())?;
    match head {
        "python" | "pypy" => Some(LanguageId::Python),
        "java" => Some(LanguageId::Java),
        "javascript" | "node.js" | "nodejs" | "js" => Some(LanguageId::JavaScript),
        "gnu" | "clang" | "msvc" if lower.contains(" c") && !lower.contains("c++") => Some(LanguageId::C),
        "c" => Some(LanguageId::C),
        _ => None,
    }
}
