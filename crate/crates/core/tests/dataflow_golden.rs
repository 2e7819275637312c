//! Data-flow entries against values frozen from the reference implementation
//! (tests/golden/gen_metric_golden.py).

use patchbench::codeparse::{extract_dataflow, parse, strip_docstrings, FlowRelation, LanguageId};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    language: LanguageId,
    code: String,
    entries: Vec<(String, usize, String, Vec<String>, Vec<usize>)>,
}

#[test]
fn entries_match_reference() {
    let cases: Vec<Case> = serde_json::from_str(include_str!("golden/dataflow_golden.json")).unwrap();
    assert_eq!(cases.len(), 160);
    let mut failures = Vec::new();
    for case in &cases {
        let tree = strip_docstrings(&parse(case.code.trim(), case.language));
        assert!(!tree.is_wrapped() && !tree.has_errors(), "{}", case.code);
        let ours: Vec<_> = extract_dataflow(&tree, case.language)
            .entries()
            .iter()
            .map(|e| {
                let rel = match e.relation {
                    FlowRelation::ComesFrom => "comesFrom",
                    FlowRelation::ComputedFrom => "computedFrom",
                };
                let mut names = e.source_names.clone();
                names.sort();
                (e.name.clone(), e.position, rel.to_string(), names, e.source_positions.clone())
            })
            .collect();
        if ours != case.entries {
            failures.push(format!("{} {:?}\n  ours:   {:?}\n  theirs: {:?}", case.language, case.code, ours, case.entries));
        }
    }
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
}
