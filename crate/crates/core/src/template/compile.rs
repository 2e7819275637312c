use std::fmt;

use serde::{Deserialize, Serialize};

use super::{join_parts, ModelStyle, PromptTemplate, Segment};
use crate::corpus::{KnowledgeKind, RepairInstance};

/// Character budget of a compiled prompt's literal text.
pub const DEFAULT_CHAR_BUDGET: usize = 8192;

/// Segment of a compiled prompt, as sent to backends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum CompiledSegment {
    #[serde(rename = "lit")]
    Literal { text: String },
    Soft {
        #[serde(deserialize_with = "crate::whole::deserialize")]
        i: usize,
        init: Option<String>,
    },
    Mask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPosition {
    Final,
    Internal,
}

/// A template filled in for one instance.
///
/// Wire form: `{"instance_id", "segments": [{"t":"lit","text"} |
/// {"t":"soft","i","init"} | {"t":"mask"}], "truncated"}`. Backends join
/// literal and soft segments with one space where neither side already has
/// whitespace at the boundary, like [`render_debug`] does.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledPrompt {
    pub instance_id: String,
    pub segments: Vec<CompiledSegment>,
    /// Set when the buggy code was cut to fit the character budget.
    pub truncated: bool,
}

impl CompiledPrompt {
    /// The plain fine-tuning input: buggy code then the mask.
    pub fn plain(instance: &RepairInstance) -> Self {
        Self {
            instance_id: instance.id.clone(),
            segments: vec![
                CompiledSegment::Literal { text: instance.buggy_code.clone() },
                CompiledSegment::Mask,
            ],
            truncated: false,
        }
    }

    pub fn soft_table(&self) -> Vec<(usize, Option<&str>)> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                CompiledSegment::Soft { i, init } => Some((*i, init.as_deref())),
                _ => None,
            })
            .collect()
    }

    pub fn mask_position(&self) -> MaskPosition {
        match self.segments.last() {
            Some(CompiledSegment::Mask) => MaskPosition::Final,
            _ => MaskPosition::Internal,
        }
    }

    /// Characters of literal text.
    pub fn literal_chars(&self) -> usize {
        self.segments
            .iter()
            .map(|s| match s {
                CompiledSegment::Literal { text } => text.chars().count(),
                _ => 0,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("instance `{instance_id}` has no `{kind}` knowledge required by template `{template_id}`")]
    MissingKnowledge { kind: KnowledgeKind, instance_id: String, template_id: String },
    #[error("instance `{instance_id}`: template text and knowledge need {needed} characters, budget is {budget}")]
    OverBudget { instance_id: String, needed: usize, budget: usize },
}

pub fn instantiate(template: &PromptTemplate, instance: &RepairInstance) -> Result<CompiledPrompt, CompileError> {
    instantiate_with_budget(template, instance, DEFAULT_CHAR_BUDGET)
}

/// Fills the input slot with the buggy code and knowledge slots with their
/// text. If the literal text exceeds `budget` characters, the buggy code
/// loses its tail until it fits; knowledge is never cut. Fails if even one
/// character of buggy code cannot fit.
pub fn instantiate_with_budget(
    template: &PromptTemplate,
    instance: &RepairInstance,
    budget: usize,
) -> Result<CompiledPrompt, CompileError> {
    let mut fixed_chars = 0;
    for seg in &template.segments {
        match seg {
            Segment::Literal { text } => fixed_chars += text.chars().count(),
            Segment::KnowledgeSlot { kind } => {
                let text = instance.knowledge.get(kind).ok_or_else(|| CompileError::MissingKnowledge {
                    kind: *kind,
                    instance_id: instance.id.clone(),
                    template_id: template.id.clone(),
                })?;
                fixed_chars += text.chars().count();
            }
            _ => {}
        }
    }
    let input_chars = instance.buggy_code.chars().count();
    let room = budget.saturating_sub(fixed_chars);
    if room == 0 && input_chars > 0 {
        return Err(CompileError::OverBudget {
            instance_id: instance.id.clone(),
            needed: fixed_chars + 1,
            budget,
        });
    }
    let truncated = input_chars > room;
    let input = if truncated {
        let end = instance.buggy_code.char_indices().nth(room).map_or(instance.buggy_code.len(), |(i, _)| i);
        &instance.buggy_code[..end]
    } else {
        instance.buggy_code.as_str()
    };

    let mut segments = Vec::with_capacity(template.segments.len());
    for seg in &template.segments {
        let text = match seg {
            Segment::Literal { text } => text.clone(),
            Segment::InputSlot => input.to_string(),
            Segment::KnowledgeSlot { kind } => instance.knowledge[kind].clone(),
            Segment::MaskSlot => {
                segments.push(CompiledSegment::Mask);
                continue;
            }
            Segment::SoftSlot { index, init } => {
                segments.push(CompiledSegment::Soft { i: *index, init: init.clone() });
                continue;
            }
        };
        if !text.is_empty() {
            segments.push(CompiledSegment::Literal { text });
        }
    }
    Ok(CompiledPrompt { instance_id: instance.id.clone(), segments, truncated })
}

/// One-line rendering with `[SOFT:i]` and `[MASK]` markers.
pub fn render_debug(compiled: &CompiledPrompt) -> String {
    let parts: Vec<String> = compiled
        .segments
        .iter()
        .map(|s| match s {
            CompiledSegment::Literal { text } => text.clone(),
            CompiledSegment::Soft { i, .. } => format!("[SOFT:{i}]"),
            CompiledSegment::Mask => "[MASK]".to_string(),
        })
        .collect();
    join_parts(parts.iter().map(String::as_str))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum StyleWarning {
    /// A generative model never sees the template text after the mask.
    MaskNotFinal { template_id: String, trailing_segments: usize },
}

impl fmt::Display for StyleWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StyleWarning::MaskNotFinal { template_id, trailing_segments } => write!(
                f,
                "template `{template_id}`: {trailing_segments} segment(s) after the mask are unused by generative models"
            ),
        }
    }
}

pub fn validate_for_style(template: &PromptTemplate, style: ModelStyle) -> Vec<StyleWarning> {
    let mut warnings = Vec::new();
    if style == ModelStyle::Generative {
        let mask = template.segments.iter().position(|s| *s == Segment::MaskSlot);
        if let Some(at) = mask.filter(|&at| at + 1 < template.segments.len()) {
            warnings.push(StyleWarning::MaskNotFinal {
                template_id: template.id.clone(),
                trailing_segments: template.segments.len() - at - 1,
            });
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codeparse::LanguageId;
    use crate::template::builtin;

    fn inst(buggy: &str) -> RepairInstance {
        RepairInstance::new("i1", LanguageId::Java, buggy, "ok")
    }

    #[test]
    fn hard_bp_compiles_and_renders() {
        let t = builtin("HBP3", ModelStyle::Infilling).unwrap();
        let c = instantiate(&t, &inst("return a - b ;")).unwrap();
        assert_eq!(
            c.segments,
            [
                CompiledSegment::Literal { text: "Fix bug in ".into() },
                CompiledSegment::Literal { text: "return a - b ;".into() },
                CompiledSegment::Mask,
            ]
        );
        assert_eq!(render_debug(&instantiate(&t, &inst("x=1")).unwrap()), "Fix bug in x=1 [MASK]");
        assert_eq!(c.mask_position(), MaskPosition::Final);
    }

    #[test]
    fn soft_bp_renders_markers() {
        let t = builtin("SBP2-rand", ModelStyle::Infilling).unwrap();
        let c = instantiate(&t, &inst("{input}")).unwrap();
        assert_eq!(render_debug(&c), "{input} [SOFT:0] [SOFT:1] [SOFT:2] [MASK]");
        assert_eq!(c.soft_table(), [(0, None), (1, None), (2, None)]);
    }

    #[test]
    fn knowledge_is_verbatim_and_required() {
        let t = builtin("KP-repair_action-hard", ModelStyle::Infilling).unwrap();
        let i = inst("if (x) y();").with_knowledge(KnowledgeKind::RepairAction, "condBranchAdd exThrowsAdd objInstAdd");
        let r = render_debug(&instantiate(&t, &i).unwrap());
        assert_eq!(
            r,
            "Please fix a buggy program if (x) y(); by taking repair actions condBranchAdd exThrowsAdd objInstAdd [MASK] is the fixed version"
        );
        let t = builtin("KP-bug_type-hard", ModelStyle::Infilling).unwrap();
        let err = instantiate(&t, &inst("x")).unwrap_err();
        assert_eq!(
            err,
            CompileError::MissingKnowledge { kind: KnowledgeKind::BugType, instance_id: "i1".into(), template_id: t.id.clone() }
        );
        assert!(err.to_string().contains("bug_type") && err.to_string().contains("i1"));
    }

    #[test]
    fn budget_truncates_input_tail_only() {
        let t = builtin("HBP3", ModelStyle::Infilling).unwrap();
        let c = instantiate_with_budget(&t, &inst("abcdéfgh"), 16).unwrap();
        assert!(c.truncated);
        assert_eq!(c.segments[1], CompiledSegment::Literal { text: "abcdé".into() });
        assert_eq!(c.literal_chars(), 16);
        assert!(!instantiate_with_budget(&t, &inst("abcde"), 16).unwrap().truncated);
        assert!(matches!(instantiate_with_budget(&t, &inst("a"), 11), Err(CompileError::OverBudget { .. })));
    }

    #[test]
    fn style_warnings() {
        let bp1 = builtin("HBP1", ModelStyle::Generative).unwrap();
        let bp2 = builtin("HBP2", ModelStyle::Generative).unwrap();
        assert_eq!(validate_for_style(&bp1, ModelStyle::Generative).len(), 1);
        assert!(validate_for_style(&bp2, ModelStyle::Generative).is_empty());
        assert!(validate_for_style(&bp1, ModelStyle::Infilling).is_empty());
    }

    #[test]
    fn wire_json() {
        let t = builtin("SBP4-init", ModelStyle::Infilling).unwrap();
        let c = instantiate(&t, &inst("x")).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"instance_id":"i1","segments":[{"t":"soft","i":0,"init":"Fix"},{"t":"lit","text":"x"},{"t":"soft","i":1,"init":"fixed"},{"t":"soft","i":2,"init":"program"},{"t":"soft","i":3,"init":"is"},{"t":"mask"}],"truncated":false}"#
        );
        assert_eq!(serde_json::from_str::<CompiledPrompt>(&json).unwrap(), c);
    }
}
