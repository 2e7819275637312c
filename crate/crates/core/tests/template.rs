use std::collections::BTreeMap;

use patchbench::corpus::{KnowledgeKind, RepairInstance};
use patchbench::template::{
    builtin, builtin_templates, instantiate, parse_template, render_debug, to_dsl, to_file, CompiledSegment,
    MaskPosition, ModelStyle, Segment, TemplateSet,
};
use patchbench::LanguageId;
use proptest::prelude::*;

fn golden() -> BTreeMap<(String, String), String> {
    include_str!("golden/templates_golden.tsv")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut f = l.split('\t');
            let (id, style, form) = (f.next().unwrap(), f.next().unwrap(), f.next().unwrap());
            ((id.to_string(), style.to_string()), form.to_string())
        })
        .collect()
}

#[test]
fn catalogue_matches_golden_file() {
    let golden = golden();
    let mut seen = 0;
    for style in ModelStyle::ALL {
        for t in builtin_templates(TemplateSet::Bp, style) {
            assert_eq!(golden[&(t.id.clone(), "any".to_string())], t.table_form(), "{}", t.id);
            seen += 1;
        }
        for t in builtin_templates(TemplateSet::Kp, style) {
            assert_eq!(golden[&(t.id.clone(), style.name().to_string())], t.table_form(), "{}", t.id);
            seen += 1;
        }
    }
    assert_eq!(seen, 82);
}

#[test]
fn builtins_round_trip_through_dsl() {
    for style in ModelStyle::ALL {
        for set in [TemplateSet::Bp, TemplateSet::Kp] {
            for t in builtin_templates(set, style) {
                assert_eq!(parse_template(&to_file(&t)).unwrap(), t, "{}", to_file(&t));
                assert_eq!(parse_template(&to_dsl(&t)).unwrap().segments, t.segments);
            }
        }
    }
}

#[test]
fn basic_segments_do_not_depend_on_style() {
    let a = builtin_templates(TemplateSet::Bp, ModelStyle::Infilling);
    let b = builtin_templates(TemplateSet::Bp, ModelStyle::Generative);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((&x.id, &x.segments), (&y.id, &y.segments));
    }
}

fn full_instance(buggy: &str) -> RepairInstance {
    KnowledgeKind::ALL
        .iter()
        .fold(RepairInstance::new("p", LanguageId::C, buggy, "f"), |i, &k| i.with_knowledge(k, format!("<{k}>")))
}

#[test]
fn knowledge_mask_position_follows_style() {
    let inst = full_instance("x");
    for t in builtin_templates(TemplateSet::Kp, ModelStyle::Generative) {
        assert_eq!(instantiate(&t, &inst).unwrap().mask_position(), MaskPosition::Final, "{}", t.id);
    }
    for t in builtin_templates(TemplateSet::Kp, ModelStyle::Infilling) {
        assert_eq!(instantiate(&t, &inst).unwrap().mask_position(), MaskPosition::Internal, "{}", t.id);
    }
}

#[test]
fn paired_knowledge_renders_both() {
    let t = builtin("KP-bug_type+error_message-hard", ModelStyle::Generative).unwrap();
    let c = instantiate(&t, &full_instance("var a = 1")).unwrap();
    assert_eq!(
        render_debug(&c),
        "Please fix a buggy program var a = 1 the bug type is <bug_type> and the error message is <error_message> the fixed version is [MASK]"
    );
}

proptest! {
    #[test]
    fn substitution_is_byte_identical(buggy in "\\PC{1,200}", know in "\\PC{1,80}") {
        let inst = RepairInstance::new("p", LanguageId::Java, buggy.clone(), "f")
            .with_knowledge(KnowledgeKind::ErrorMessage, know.clone());
        let t = builtin("KP-error_message-soft", ModelStyle::Infilling).unwrap();
        let c = instantiate(&t, &inst).unwrap();
        let lits: Vec<&str> = c.segments.iter().filter_map(|s| match s {
            CompiledSegment::Literal { text } => Some(text.as_str()),
            _ => None,
        }).collect();
        prop_assert_eq!(lits, vec![buggy.as_str(), know.as_str()]);
        prop_assert_eq!(c.soft_table().len(), t.soft_count());
    }

    #[test]
    fn parser_never_panics(text in "[{}XMASKSOFT*:\"K_a-z 0-9]{0,40}") {
        if let Ok(t) = parse_template(&text) {
            prop_assert_eq!(t.segments.iter().filter(|s| **s == Segment::MaskSlot).count(), 1);
            prop_assert_eq!(parse_template(&to_dsl(&t)).unwrap().segments, t.segments);
        }
    }
}
