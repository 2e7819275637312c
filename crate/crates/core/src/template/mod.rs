//! Prompt templates: hard and soft basic prompts, knowledge prompts, and
//! their compilation against repair instances.
//!
//! Templates are written in a small DSL (see [`parse_template`]):
//!
//! ```text
//! #kind=hbp style=infilling id=HBP3
//! Fix bug in {X} {MASK}
//! ```
//!
//! `{X}` is the buggy-code slot, `{MASK}` the output slot, `{SOFT}` one soft
//! token, `{SOFT*n}` n of them, `{SOFT:"word"}` a soft token initialized
//! from a word, and `{K:kind}` a knowledge slot. `{{` and `}}` are literal
//! braces. Whitespace-only text between two slots is a separator, not a
//! literal; when rendered, adjacent parts are joined with one space unless
//! one side already has whitespace at the boundary.

mod builtin;
mod compile;
mod dsl;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::KnowledgeKind;

pub use builtin::{builtin, builtin_templates, TemplateSet};
pub use compile::{
    instantiate, instantiate_with_budget, render_debug, validate_for_style, CompileError, CompiledPrompt,
    CompiledSegment, MaskPosition, StyleWarning, DEFAULT_CHAR_BUDGET,
};
pub use dsl::{parse_template, to_dsl, to_file};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum Segment {
    #[serde(rename = "lit")]
    Literal { text: String },
    #[serde(rename = "input")]
    InputSlot,
    #[serde(rename = "mask")]
    MaskSlot,
    #[serde(rename = "soft")]
    SoftSlot {
        #[serde(rename = "i", deserialize_with = "crate::whole::deserialize")]
        index: usize,
        init: Option<String>,
    },
    #[serde(rename = "knowledge")]
    KnowledgeSlot { kind: KnowledgeKind },
}

impl Segment {
    pub fn literal(text: impl Into<String>) -> Self {
        Segment::Literal { text: text.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Hbp,
    SbpInitialized,
    SbpRandom,
    KpHard,
    KpSoft,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 5] =
        [Self::Hbp, Self::SbpInitialized, Self::SbpRandom, Self::KpHard, Self::KpSoft];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hbp => "hbp",
            Self::SbpInitialized => "sbp_initialized",
            Self::SbpRandom => "sbp_random",
            Self::KpHard => "kp_hard",
            Self::KpSoft => "kp_soft",
        }
    }

    pub fn is_knowledge(self) -> bool {
        matches!(self, Self::KpHard | Self::KpSoft)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStyle {
    /// Conditions on both sides of the mask.
    #[default]
    Infilling,
    /// Conditions on preceding tokens only.
    Generative,
}

impl ModelStyle {
    pub fn name(self) -> &'static str {
        match self {
            Self::Infilling => "infilling",
            Self::Generative => "generative",
        }
    }
}

macro_rules! named_enum {
    ($t:ty, $what:literal) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = TemplateError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| TemplateError::Header {
                    message: format!(concat!("unknown ", $what, " `{}`"), s),
                })
            }
        }
    };
}

impl ModelStyle {
    pub const ALL: [ModelStyle; 2] = [Self::Infilling, Self::Generative];
}

named_enum!(TemplateKind, "template kind");
named_enum!(ModelStyle, "model style");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("at `{token}` (offset {offset}): {message}")]
    Parse { token: String, offset: usize, message: String },
    #[error("bad header: {message}")]
    Header { message: String },
    #[error("template `{id}`: {message}")]
    Invalid { id: String, message: String },
}

/// A prompt template. Construct with [`PromptTemplate::new`] or
/// [`parse_template`], both of which enforce the invariants below.
///
/// - exactly one input slot and one mask slot
/// - soft indices run 0..S-1 in order
/// - literals are non-empty
/// - `hbp`/`kp_hard` have no soft slots; `sbp_random` softs have no init,
///   `sbp_initialized` softs all have one
/// - knowledge slots appear in `kp_*` templates only, and at least once there
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub kind: TemplateKind,
    #[serde(rename = "style")]
    pub model_style: ModelStyle,
    pub segments: Vec<Segment>,
}

impl PromptTemplate {
    pub fn new(
        id: impl Into<String>,
        kind: TemplateKind,
        model_style: ModelStyle,
        segments: Vec<Segment>,
    ) -> Result<Self, TemplateError> {
        let t = Self { id: id.into(), kind, model_style, segments };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let invalid = |message: String| TemplateError::Invalid { id: self.id.clone(), message };
        let count = |f: fn(&Segment) -> bool| self.segments.iter().filter(|s| f(s)).count();
        let inputs = count(|s| matches!(s, Segment::InputSlot));
        let masks = count(|s| matches!(s, Segment::MaskSlot));
        if inputs != 1 {
            return Err(invalid(format!("expected exactly one input slot, found {inputs}")));
        }
        if masks != 1 {
            return Err(invalid(format!("expected exactly one mask slot, found {masks}")));
        }
        if self.segments.iter().any(|s| matches!(s, Segment::Literal { text } if text.is_empty())) {
            return Err(invalid("empty literal".into()));
        }
        for (expected, soft) in self.soft_slots().enumerate() {
            if soft.0 != expected {
                return Err(invalid(format!("soft slot index {} where {expected} was expected", soft.0)));
            }
        }
        let softs = self.soft_count();
        let knowledge = self.knowledge_kinds().len();
        match self.kind {
            TemplateKind::Hbp | TemplateKind::KpHard if softs > 0 => {
                return Err(invalid(format!("{} template has soft slots", self.kind)));
            }
            TemplateKind::SbpRandom if self.soft_slots().any(|s| s.1.is_some()) => {
                return Err(invalid("sbp_random soft slot has an init word".into()));
            }
            TemplateKind::SbpInitialized if self.soft_slots().any(|s| s.1.is_none()) => {
                return Err(invalid("sbp_initialized soft slot lacks an init word".into()));
            }
            TemplateKind::SbpInitialized | TemplateKind::SbpRandom | TemplateKind::KpSoft if softs == 0 => {
                return Err(invalid(format!("{} template has no soft slots", self.kind)));
            }
            _ => {}
        }
        if self.kind.is_knowledge() && knowledge == 0 {
            return Err(invalid("knowledge template has no knowledge slot".into()));
        }
        if !self.kind.is_knowledge() && knowledge > 0 {
            return Err(invalid("basic template has a knowledge slot".into()));
        }
        Ok(())
    }

    /// (index, init) of every soft slot in order.
    pub fn soft_slots(&self) -> impl Iterator<Item = (usize, Option<&str>)> {
        self.segments.iter().filter_map(|s| match s {
            Segment::SoftSlot { index, init } => Some((*index, init.as_deref())),
            _ => None,
        })
    }

    pub fn soft_count(&self) -> usize {
        self.soft_slots().count()
    }

    pub fn knowledge_kinds(&self) -> Vec<KnowledgeKind> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::KnowledgeSlot { kind } => Some(*kind),
                _ => None,
            })
            .collect()
    }

    pub fn mask_is_final(&self) -> bool {
        matches!(self.segments.last(), Some(Segment::MaskSlot))
    }

    /// Table notation: `[X]`, `[mask]`, `[SOFT]`, runs of n soft slots as
    /// `[SOFT] * n`, knowledge as `[bugType]` and the like, literals
    /// trimmed, all parts joined by single spaces.
    pub fn table_form(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < self.segments.len() {
            match &self.segments[i] {
                Segment::Literal { text } => {
                    let t = text.split_whitespace().collect::<Vec<_>>().join(" ");
                    if !t.is_empty() {
                        parts.push(t);
                    }
                }
                Segment::InputSlot => parts.push("[X]".into()),
                Segment::MaskSlot => parts.push("[mask]".into()),
                Segment::KnowledgeSlot { kind } => parts.push(format!("[{}]", knowledge_placeholder(*kind))),
                Segment::SoftSlot { .. } => {
                    let run = self.segments[i..].iter().take_while(|s| matches!(s, Segment::SoftSlot { .. })).count();
                    parts.push(if run == 1 { "[SOFT]".into() } else { format!("[SOFT] * {run}") });
                    i += run;
                    continue;
                }
            }
            i += 1;
        }
        parts.join(" ")
    }
}

/// Placeholder name of a knowledge slot in table notation.
pub fn knowledge_placeholder(kind: KnowledgeKind) -> &'static str {
    match kind {
        KnowledgeKind::RepairAction => "repairAction",
        KnowledgeKind::RepairPattern => "repairPattern",
        KnowledgeKind::BugType => "bugType",
        KnowledgeKind::BuggyNodeAst => "buggyNodeAST",
        KnowledgeKind::ErrorMessage => "errorMessage",
        KnowledgeKind::AlgorithmTags => "algorithmTags",
    }
}

/// Joins rendered parts with one space where neither side has whitespace.
pub(crate) fn join_parts<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for p in parts {
        if p.is_empty() {
            continue;
        }
        let needs_space = !out.is_empty()
            && !out.ends_with(char::is_whitespace)
            && !p.starts_with(char::is_whitespace);
        if needs_space {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}
