//! The built-in template catalogue.
//!
//! Basic prompts BP1-BP7 come in three kinds each: hard (`HBPn`), soft with
//! every soft token initialized from the hard word it replaces
//! (`SBPn-init`), and soft with random init (`SBPn-rand`). A soft variant has
//! one soft token per hard word.
//!
//! Knowledge prompts open with "Please fix a buggy program", follow the
//! buggy code with a phrase naming the knowledge and the knowledge itself,
//! and close with "[mask] is the fixed version" for infilling models or
//! "the fixed version is [mask]" for generative ones. Paired knowledge joins
//! the two phrases with "and". Ids are `KP-<kinds>-hard` and `KP-<kinds>-soft`,
//! with `<kinds>` joined by `+`.

use serde::{Deserialize, Serialize};

use super::{ModelStyle, PromptTemplate, Segment, TemplateKind};
use crate::corpus::KnowledgeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateSet {
    Bp,
    Kp,
}

#[derive(Clone, Copy)]
enum Part {
    Words(&'static str),
    Input,
    Mask,
    Knowledge(KnowledgeKind),
}

use Part::{Input as X, Mask as M, Words as W};

const BASIC: [&[Part]; 7] = [
    &[X, M, W("is fixed program")],
    &[X, W("fixed program is"), M],
    &[W("Fix bug in"), X, M],
    &[W("Fix"), X, W("fixed program is"), M],
    &[W("Fix"), X, M, W("is fixed program")],
    &[X, W("is buggy program"), M, W("is fixed program")],
    &[W("Fix"), X, W("is buggy program"), M, W("is fixed program")],
];

fn knowledge_phrase(kind: KnowledgeKind) -> &'static str {
    match kind {
        KnowledgeKind::BugType => "the bug type is",
        KnowledgeKind::RepairAction => "by taking repair actions",
        KnowledgeKind::RepairPattern => "by following repair patterns",
        KnowledgeKind::BuggyNodeAst => "the AST of buggy nodes is",
        KnowledgeKind::ErrorMessage => "the error message is",
        KnowledgeKind::AlgorithmTags => "the algorithm tags are",
    }
}

/// Knowledge pairs offered together by one dataset.
const PAIRS: [[KnowledgeKind; 2]; 4] = [
    [KnowledgeKind::RepairAction, KnowledgeKind::RepairPattern],
    [KnowledgeKind::BugType, KnowledgeKind::BuggyNodeAst],
    [KnowledgeKind::BugType, KnowledgeKind::ErrorMessage],
    [KnowledgeKind::AlgorithmTags, KnowledgeKind::ErrorMessage],
];

fn knowledge_parts(kinds: &[KnowledgeKind], style: ModelStyle) -> Vec<Part> {
    let mut parts = vec![W("Please fix a buggy program"), X];
    for (i, &kind) in kinds.iter().enumerate() {
        if i > 0 {
            parts.push(W("and"));
        }
        parts.push(W(knowledge_phrase(kind)));
        parts.push(Part::Knowledge(kind));
    }
    match style {
        ModelStyle::Infilling => parts.extend([M, W("is the fixed version")]),
        ModelStyle::Generative => parts.extend([W("the fixed version is"), M]),
    }
    parts
}

#[derive(Clone, Copy, PartialEq)]
enum Realize {
    Hard,
    SoftInit,
    SoftRandom,
}

fn realize(parts: &[Part], how: Realize) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut softs = 0;
    for (i, part) in parts.iter().enumerate() {
        match *part {
            Part::Input => segments.push(Segment::InputSlot),
            Part::Mask => segments.push(Segment::MaskSlot),
            Part::Knowledge(kind) => segments.push(Segment::KnowledgeSlot { kind }),
            Part::Words(words) if how == Realize::Hard => {
                // consecutive word groups share one literal
                let mut text = match segments.last_mut() {
                    Some(Segment::Literal { text }) => std::mem::take(text),
                    _ => String::new(),
                };
                if matches!(segments.last(), Some(Segment::Literal { .. })) {
                    segments.pop();
                }
                if i > 0 {
                    text.push(' ');
                }
                text.push_str(words);
                if i + 1 < parts.len() && !matches!(parts[i + 1], Part::Words(_)) {
                    text.push(' ');
                }
                segments.push(Segment::Literal { text });
            }
            Part::Words(words) => {
                for word in words.split(' ') {
                    let init = (how == Realize::SoftInit).then(|| word.to_string());
                    segments.push(Segment::SoftSlot { index: softs, init });
                    softs += 1;
                }
            }
        }
    }
    segments
}

fn make(id: String, kind: TemplateKind, style: ModelStyle, segments: Vec<Segment>) -> PromptTemplate {
    PromptTemplate::new(id, kind, style, segments).expect("built-in templates are valid")
}

fn kinds_id(kinds: &[KnowledgeKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
}

/// All built-in templates of a set, in catalogue order.
///
/// The basic set has 21 templates whose segments do not depend on `style`.
/// The knowledge set has a hard and a soft template for each single
/// knowledge kind and for each dataset pair, with the mask placed per `style`.
pub fn builtin_templates(set: TemplateSet, style: ModelStyle) -> Vec<PromptTemplate> {
    match set {
        TemplateSet::Bp => BASIC
            .iter()
            .enumerate()
            .flat_map(|(i, parts)| {
                let n = i + 1;
                [
                    make(format!("HBP{n}"), TemplateKind::Hbp, style, realize(parts, Realize::Hard)),
                    make(format!("SBP{n}-init"), TemplateKind::SbpInitialized, style, realize(parts, Realize::SoftInit)),
                    make(format!("SBP{n}-rand"), TemplateKind::SbpRandom, style, realize(parts, Realize::SoftRandom)),
                ]
            })
            .collect(),
        TemplateSet::Kp => {
            let singles = KnowledgeKind::ALL.iter().map(std::slice::from_ref);
            let pairs = PAIRS.iter().map(|p| p.as_slice());
            singles
                .chain(pairs)
                .flat_map(|kinds| {
                    let parts = knowledge_parts(kinds, style);
                    let id = kinds_id(kinds);
                    [
                        make(format!("KP-{id}-hard"), TemplateKind::KpHard, style, realize(&parts, Realize::Hard)),
                        make(format!("KP-{id}-soft"), TemplateKind::KpSoft, style, realize(&parts, Realize::SoftInit)),
                    ]
                })
                .collect()
        }
    }
}

/// Looks a built-in template up by id.
pub fn builtin(id: &str, style: ModelStyle) -> Option<PromptTemplate> {
    let set = if id.starts_with("KP-") { TemplateSet::Kp } else { TemplateSet::Bp };
    builtin_templates(set, style).into_iter().find(|t| t.id == id)
}
