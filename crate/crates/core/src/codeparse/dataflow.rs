//! Def-use data flow over a fragment's tokens.
//!
//! The walk keeps, for every variable name, the token positions of its most
//! recent definitions. A use links back to those positions (`ComesFrom`);
//! an assignment links its targets to every variable token on its right-hand
//! side (`ComputedFrom`). Branches merge their definition sets, and loop
//! bodies are walked twice so that back edges show up. Names are resolved
//! within the fragment only: no scopes, aliasing, or fields.
//!
//! Rules are per language and keyed on grammar node kinds. C reuses the
//! table of a sibling C-family grammar, so only the rules whose node kinds
//! exist in the C grammar (assignments, `if`, `while`) fire there.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tree::{code_tokens, is_token};
use super::{LanguageId, NodeId, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FlowRelation {
    ComesFrom,
    ComputedFrom,
}

/// A token that takes part in data flow, with the tokens it depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub name: String,
    pub position: usize,
    pub relation: FlowRelation,
    pub source_names: Vec<String>,
    pub source_positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowNode {
    pub name: String,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub relation: FlowRelation,
}

/// Data-flow graph of one fragment. Positions are indices into the
/// fragment's token stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFlowGraph {
    entries: Vec<FlowEntry>,
}

impl DataFlowGraph {
    pub fn entries(&self) -> &[FlowEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nodes(&self) -> Vec<FlowNode> {
        let mut seen: HashMap<usize, String> = HashMap::new();
        for e in &self.entries {
            seen.entry(e.position).or_insert_with(|| e.name.clone());
            for (n, &p) in e.source_names.iter().zip(&e.source_positions) {
                seen.entry(p).or_insert_with(|| n.clone());
            }
        }
        let mut nodes: Vec<_> = seen.into_iter().map(|(position, name)| FlowNode { name, position }).collect();
        nodes.sort_by_key(|n| n.position);
        nodes
    }

    /// Directed def-to-use edges, ordered by target then source position.
    pub fn edges(&self) -> Vec<FlowEdge> {
        let mut edges: Vec<_> = self
            .entries
            .iter()
            .flat_map(|e| {
                e.source_positions.iter().map(move |&from| FlowEdge { from, to: e.position, relation: e.relation })
            })
            .collect();
        edges.sort_by_key(|e| (e.to, e.from));
        edges
    }
}

type States = HashMap<String, Vec<usize>>;

#[derive(Debug)]
struct Malformed;

struct Rules {
    def: &'static [&'static str],
    def_by_children: bool,
    assignment: &'static [&'static str],
    increment: &'static [&'static str],
    branch: &'static [&'static str],
    for_loop: &'static [&'static str],
    for_init: &'static str,
    for_each: &'static [&'static str],
    for_each_fields: (&'static str, &'static str),
    while_loop: &'static [&'static str],
    branch_keeps_outer: bool,
}

const JAVA: Rules = Rules {
    def: &["variable_declarator"],
    def_by_children: false,
    assignment: &["assignment_expression"],
    increment: &["update_expression"],
    branch: &["if_statement", "else"],
    for_loop: &["for_statement"],
    for_init: "local_variable_declaration",
    for_each: &["enhanced_for_statement"],
    for_each_fields: ("name", "value"),
    while_loop: &["while_statement"],
    branch_keeps_outer: false,
};

const JAVASCRIPT: Rules = Rules {
    def: &["variable_declarator"],
    def_by_children: false,
    assignment: &["assignment_pattern", "augmented_assignment_expression"],
    increment: &["update_expression"],
    branch: &["if_statement", "else"],
    for_loop: &["for_statement"],
    for_init: "variable_declaration",
    for_each: &[],
    for_each_fields: ("left", "right"),
    while_loop: &["while_statement"],
    branch_keeps_outer: true,
};

const C_FAMILY: Rules = Rules {
    def: &["variable_declarator"],
    def_by_children: true,
    assignment: &["assignment_expression"],
    increment: &["postfix_unary_expression"],
    branch: &["if_statement", "else"],
    for_loop: &["for_statement"],
    for_init: "local_variable_declaration",
    for_each: &["for_each_statement"],
    for_each_fields: ("left", "right"),
    while_loop: &["while_statement"],
    branch_keeps_outer: false,
};

struct Walker<'t> {
    tree: &'t SyntaxTree,
    language: LanguageId,
    token_at: HashMap<NodeId, (usize, String)>,
}

type Walk = Result<(Vec<FlowEntry>, States), Malformed>;

/// Extracts the def-use graph of `tree`.
///
/// Deterministic for a given tree. Malformed regions (missing fields in an
/// error-recovered parse) yield an empty graph rather than a partial one.
pub fn extract_dataflow(tree: &SyntaxTree, language: LanguageId) -> DataFlowGraph {
    let token_at = code_tokens(tree)
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t.node, (i, t.text)))
        .collect();
    let walker = Walker { tree, language, token_at };
    let raw = match walker.walk(tree.root(), States::new()) {
        Ok((entries, _)) => entries,
        Err(Malformed) => Vec::new(),
    };
    DataFlowGraph { entries: finish(raw) }
}

/// Keeps entries that are linked to something and folds duplicates per
/// position.
fn finish(mut raw: Vec<FlowEntry>) -> Vec<FlowEntry> {
    raw.sort_by_key(|e| e.position);
    let mut linked = std::collections::HashSet::new();
    for e in &raw {
        if !e.source_positions.is_empty() {
            linked.insert(e.position);
        }
        linked.extend(e.source_positions.iter().copied());
    }
    let mut order: Vec<usize> = Vec::new();
    let mut by_position: HashMap<usize, FlowEntry> = HashMap::new();
    for e in raw.into_iter().filter(|e| linked.contains(&e.position)) {
        match by_position.get_mut(&e.position) {
            None => {
                order.push(e.position);
                by_position.insert(e.position, e);
            }
            Some(prev) => {
                let names = union_sorted(&prev.source_names, &e.source_names);
                let positions = union_sorted(&prev.source_positions, &e.source_positions);
                *prev = FlowEntry { source_names: names, source_positions: positions, ..e };
            }
        }
    }
    order.into_iter().map(|p| by_position.remove(&p).expect("recorded")).collect()
}

fn union_sorted<T: Ord + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out: Vec<T> = a.iter().chain(b).cloned().collect();
    out.sort();
    out.dedup();
    out
}

/// Folds entries sharing (name, position, relation), keeping first-seen order
/// before the final stable sort by position.
fn fold_duplicates(entries: Vec<FlowEntry>) -> Vec<FlowEntry> {
    let mut order: Vec<(String, usize, FlowRelation)> = Vec::new();
    let mut merged: HashMap<(String, usize, FlowRelation), (Vec<String>, Vec<usize>)> = HashMap::new();
    for e in entries {
        let key = (e.name.clone(), e.position, e.relation);
        match merged.get_mut(&key) {
            None => {
                order.push(key.clone());
                merged.insert(key, (e.source_names, e.source_positions));
            }
            Some((names, positions)) => {
                *names = union_sorted(names, &e.source_names);
                *positions = union_sorted(positions, &e.source_positions);
            }
        }
    }
    let mut out: Vec<FlowEntry> = order
        .into_iter()
        .map(|key| {
            let (source_names, source_positions) = merged.remove(&key).expect("recorded");
            FlowEntry { name: key.0, position: key.1, relation: key.2, source_names, source_positions }
        })
        .collect();
    out.sort_by_key(|e| e.position);
    out
}

fn by_position(mut entries: Vec<FlowEntry>) -> Vec<FlowEntry> {
    entries.sort_by_key(|e| e.position);
    entries
}

fn merge_states(branches: Vec<States>) -> States {
    let mut out = States::new();
    for branch in branches {
        for (k, v) in branch {
            out.entry(k).or_default().extend(v);
        }
    }
    for v in out.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    out
}

impl Walker<'_> {
    fn kind(&self, id: NodeId) -> &'static str {
        self.tree.node(id).kind
    }

    fn children(&self, id: NodeId) -> &[NodeId] {
        &self.tree.node(id).children
    }

    fn field(&self, id: NodeId, name: &str) -> Result<NodeId, Malformed> {
        self.tree.child_by_field(id, name).ok_or(Malformed)
    }

    fn token(&self, id: NodeId) -> (usize, &str) {
        let (i, text) = &self.token_at[&id];
        (*i, text.as_str())
    }

    /// Tokens under `id` that are not keywords or punctuation.
    fn variables(&self, id: NodeId) -> Vec<(usize, String)> {
        let node = self.tree.node(id);
        if is_token(node) {
            let (i, text) = self.token(id);
            if node.kind != text {
                return vec![(i, text.to_string())];
            }
            return Vec::new();
        }
        node.children.iter().flat_map(|&c| self.variables(c)).collect()
    }

    fn walk(&self, id: NodeId, states: States) -> Walk {
        if id != self.tree.root() || !self.tree.node(id).is_leaf() {
            if is_token(self.tree.node(id)) {
                return Ok(self.leaf(id, states));
            }
        } else {
            return Ok((Vec::new(), states));
        }
        match self.language {
            LanguageId::Python => self.walk_python(id, states),
            LanguageId::Java => self.walk_rules(&JAVA, id, states),
            LanguageId::JavaScript => self.walk_rules(&JAVASCRIPT, id, states),
            LanguageId::C => self.walk_rules(&C_FAMILY, id, states),
        }
    }

    fn leaf(&self, id: NodeId, mut states: States) -> (Vec<FlowEntry>, States) {
        let kind = self.kind(id);
        let (position, text) = self.token(id);
        if kind == text {
            return (Vec::new(), states);
        }
        let entry = if let Some(defs) = states.get(text) {
            FlowEntry {
                name: text.to_string(),
                position,
                relation: FlowRelation::ComesFrom,
                source_names: vec![text.to_string()],
                source_positions: defs.clone(),
            }
        } else {
            if kind == "identifier" {
                states.insert(text.to_string(), vec![position]);
            }
            FlowEntry {
                name: text.to_string(),
                position,
                relation: FlowRelation::ComesFrom,
                source_names: Vec::new(),
                source_positions: Vec::new(),
            }
        };
        (vec![entry], states)
    }

    fn walk_children(&self, ids: &[NodeId], mut states: States, out: &mut Vec<FlowEntry>) -> Result<States, Malformed> {
        for &c in ids {
            let (entries, next) = self.walk(c, states)?;
            out.extend(entries);
            states = next;
        }
        Ok(states)
    }

    /// `targets` computed from every variable in `sources`, pairwise.
    fn link_pairwise(
        &self,
        targets: NodeId,
        sources: NodeId,
        relation: FlowRelation,
        states: &mut States,
        out: &mut Vec<FlowEntry>,
    ) {
        let values = self.variables(sources);
        for (position, name) in self.variables(targets) {
            for (vp, vn) in &values {
                out.push(FlowEntry {
                    name: name.clone(),
                    position,
                    relation,
                    source_names: vec![vn.clone()],
                    source_positions: vec![*vp],
                });
            }
            states.insert(name, vec![position]);
        }
    }

    /// `targets` computed from all variables in `sources` at once.
    fn link_grouped(&self, targets: NodeId, sources: NodeId, states: &mut States, out: &mut Vec<FlowEntry>) {
        let values = self.variables(sources);
        for (position, name) in self.variables(targets) {
            out.push(FlowEntry {
                name: name.clone(),
                position,
                relation: FlowRelation::ComputedFrom,
                source_names: values.iter().map(|(_, n)| n.clone()).collect(),
                source_positions: values.iter().map(|(p, _)| *p).collect(),
            });
            states.insert(name, vec![position]);
        }
    }

    fn declaration(&self, name: NodeId, value: Option<NodeId>, mut states: States) -> Walk {
        let mut out = Vec::new();
        match value {
            None => {
                for (position, text) in self.variables(name) {
                    out.push(FlowEntry {
                        name: text.clone(),
                        position,
                        relation: FlowRelation::ComesFrom,
                        source_names: Vec::new(),
                        source_positions: Vec::new(),
                    });
                    states.insert(text, vec![position]);
                }
            }
            Some(value) => {
                let (entries, next) = self.walk(value, states)?;
                out.extend(entries);
                states = next;
                self.link_pairwise(name, value, FlowRelation::ComesFrom, &mut states, &mut out);
            }
        }
        Ok((by_position(out), states))
    }

    fn walk_rules(&self, rules: &Rules, id: NodeId, states: States) -> Walk {
        let kind = self.kind(id);
        let children = self.children(id);

        if rules.def.contains(&kind) {
            let (name, value) = if rules.def_by_children {
                let name = *children.first().ok_or(Malformed)?;
                (name, if children.len() == 2 { Some(children[1]) } else { None })
            } else {
                (self.field(id, "name")?, self.tree.child_by_field(id, "value"))
            };
            return self.declaration(name, value, states);
        }

        if rules.assignment.contains(&kind) {
            let left = self.field(id, "left")?;
            let right = self.field(id, "right")?;
            let (mut out, mut states) = self.walk(right, states)?;
            self.link_pairwise(left, right, FlowRelation::ComputedFrom, &mut states, &mut out);
            return Ok((by_position(out), states));
        }

        if rules.increment.contains(&kind) {
            let mut out = Vec::new();
            let mut states = states;
            self.link_pairwise(id, id, FlowRelation::ComputedFrom, &mut states, &mut out);
            return Ok((by_position(out), states));
        }

        if rules.branch.contains(&kind) {
            let mut out = Vec::new();
            let mut current = states.clone();
            let mut branches = Vec::new();
            let mut in_alternative = false;
            let mut has_else = kind.contains("else");
            for &c in children {
                let ck = self.kind(c);
                if ck.contains("else") {
                    has_else = true;
                }
                if !rules.branch.contains(&ck) && !in_alternative {
                    let (entries, next) = self.walk(c, current)?;
                    out.extend(entries);
                    current = next;
                } else {
                    in_alternative = true;
                    let (entries, next) = self.walk(c, states.clone())?;
                    out.extend(entries);
                    branches.push(next);
                }
            }
            branches.push(current);
            if !has_else {
                branches.push(states.clone());
            }
            if rules.branch_keeps_outer {
                branches.push(states);
            }
            return Ok((by_position(out), merge_states(branches)));
        }

        if rules.for_loop.contains(&kind) {
            let mut out = Vec::new();
            let mut states = self.walk_children(children, states, &mut out)?;
            if let Some(init) = children.iter().position(|&c| self.kind(c) == rules.for_init) {
                states = self.walk_children(&children[init + 1..], states, &mut out)?;
            }
            return Ok((fold_duplicates(out), states));
        }

        if rules.for_each.contains(&kind) {
            let name = self.field(id, rules.for_each_fields.0)?;
            let value = self.field(id, rules.for_each_fields.1)?;
            let body = self.field(id, "body")?;
            let mut out = Vec::new();
            let mut states = states;
            for _ in 0..2 {
                let (entries, next) = self.walk(value, states)?;
                out.extend(entries);
                states = next;
                self.link_pairwise(name, value, FlowRelation::ComputedFrom, &mut states, &mut out);
                let (entries, next) = self.walk(body, states)?;
                out.extend(entries);
                states = next;
            }
            return Ok((fold_duplicates(out), states));
        }

        if rules.while_loop.contains(&kind) {
            let mut out = Vec::new();
            let mut states = states;
            for _ in 0..2 {
                states = self.walk_children(children, states, &mut out)?;
            }
            return Ok((fold_duplicates(out), states));
        }

        let mut out = Vec::new();
        let states = self.walk_children(children, states, &mut out)?;
        Ok((by_position(out), states))
    }

    fn walk_python(&self, id: NodeId, states: States) -> Walk {
        let kind = self.kind(id);
        let children = self.children(id);
        match kind {
            "default_parameter" => {
                let name = self.field(id, "name")?;
                self.declaration(name, self.tree.child_by_field(id, "value"), states)
            }
            "assignment" | "augmented_assignment" | "for_in_clause" => {
                let (lefts, rights) = if kind == "for_in_clause" {
                    (vec![self.field(id, "left")?], vec![*children.last().ok_or(Malformed)?])
                } else {
                    let Some(right) = self.tree.child_by_field(id, "right") else {
                        return Ok((Vec::new(), states));
                    };
                    let left = self.field(id, "left")?;
                    self.python_sides(left, right)
                };
                let mut out = Vec::new();
                let mut states = self.walk_children(&rights, states, &mut out)?;
                for (&l, &r) in lefts.iter().zip(&rights) {
                    self.link_grouped(l, r, &mut states, &mut out);
                }
                Ok((by_position(out), states))
            }
            "if_statement" => {
                let mut out = Vec::new();
                let mut current = states.clone();
                let mut branches = Vec::new();
                let mut has_else = false;
                for &c in children {
                    let ck = self.kind(c);
                    if ck.contains("else") {
                        has_else = true;
                    }
                    if ck != "elif_clause" && ck != "else_clause" {
                        let (entries, next) = self.walk(c, current)?;
                        out.extend(entries);
                        current = next;
                    } else {
                        let (entries, next) = self.walk(c, states.clone())?;
                        out.extend(entries);
                        branches.push(next);
                    }
                }
                branches.push(current);
                if !has_else {
                    branches.push(states);
                }
                Ok((by_position(out), merge_states(branches)))
            }
            "for_statement" => {
                let mut out = Vec::new();
                let mut states = states;
                for _ in 0..2 {
                    let left = self.field(id, "left")?;
                    let right = self.field(id, "right")?;
                    let (lefts, rights) = self.python_sides(left, right);
                    states = self.walk_children(&rights, states, &mut out)?;
                    for (&l, &r) in lefts.iter().zip(&rights) {
                        self.link_grouped(l, r, &mut states, &mut out);
                    }
                    if let Some(&last) = children.last() {
                        if self.kind(last) == "block" {
                            let (entries, next) = self.walk(last, states)?;
                            out.extend(entries);
                            states = next;
                        }
                    }
                }
                Ok((fold_duplicates(out), states))
            }
            "while_statement" => {
                let mut out = Vec::new();
                let mut states = states;
                for _ in 0..2 {
                    states = self.walk_children(children, states, &mut out)?;
                }
                Ok((fold_duplicates(out), states))
            }
            _ => {
                // comprehension clauses bind their variables before the element expression
                let (first, rest): (Vec<NodeId>, Vec<NodeId>) =
                    children.iter().partition(|&&c| self.kind(c) == "for_in_clause");
                let mut out = Vec::new();
                let states = self.walk_children(&first, states, &mut out)?;
                let states = self.walk_children(&rest, states, &mut out)?;
                Ok((by_position(out), states))
            }
        }
    }

    /// Pairs up tuple targets with tuple values; falls back to the whole
    /// sides when the arities differ.
    fn python_sides(&self, left: NodeId, right: NodeId) -> (Vec<NodeId>, Vec<NodeId>) {
        let parts = |id: NodeId| -> Vec<NodeId> {
            self.children(id).iter().copied().filter(|&c| self.kind(c) != ",").collect()
        };
        let (mut lefts, mut rights) = (parts(left), parts(right));
        if lefts.len() != rights.len() {
            lefts = vec![left];
            rights = vec![right];
        }
        if lefts.is_empty() {
            lefts = vec![left];
        }
        if rights.is_empty() {
            rights = vec![right];
        }
        (lefts, rights)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn edges(code: &str, lang: LanguageId) -> Vec<(usize, usize, FlowRelation)> {
        let tree = parse(code, lang);
        extract_dataflow(&tree, lang).edges().into_iter().map(|e| (e.from, e.to, e.relation)).collect()
    }

    // Hand traces. Token positions for `x = 1; y = x;`:
    // x0 =1 1_2 ;3 y4 =5 x6 ;7
    #[test]
    fn copy_through_variable() {
        use FlowRelation::*;
        assert_eq!(
            edges("x = 1; y = x;", LanguageId::Java),
            [(2, 0, ComputedFrom), (6, 4, ComputedFrom), (0, 6, ComesFrom)]
        );
    }

    // x0 =1 x2 +3 1_4 ;5 ; the right-hand x is first seen there, and feeds the
    // definition at position 0.
    #[test]
    fn self_update_links_across_positions() {
        use FlowRelation::*;
        assert_eq!(edges("x = x + 1;", LanguageId::C), [(2, 0, ComputedFrom), (4, 0, ComputedFrom)]);
        let tree = parse("x = x + 1;", LanguageId::C);
        let graph = extract_dataflow(&tree, LanguageId::C);
        let def = &graph.entries()[0];
        assert_eq!((def.name.as_str(), def.position), ("x", 0));
        assert_eq!(def.source_names, ["1", "x"]);
        assert_eq!(def.source_positions, [2, 4]);
    }

    #[test]
    fn no_variables_no_graph() {
        for lang in LanguageId::ALL {
            let tree = parse("return;", lang);
            assert!(extract_dataflow(&tree, lang).is_empty(), "{lang}");
        }
        assert!(extract_dataflow(&parse("", LanguageId::Python), LanguageId::Python).is_empty());
    }

    #[test]
    fn python_tuple_assignment_pairs_elements() {
        // a0 ,1 b2 =3 b4 ,5 a6
        use FlowRelation::*;
        assert_eq!(edges("a, b = b, a", LanguageId::Python), [(4, 0, ComputedFrom), (6, 2, ComputedFrom)]);
    }

    #[test]
    fn loops_see_back_edges() {
        // while0 (1 i2 <3 n4 )5 {6 i7 =8 i9 +10 1_11 ;12 }13
        let tree = parse("while (i < n) { i = i + 1; }", LanguageId::Java);
        let graph = extract_dataflow(&tree, LanguageId::Java);
        let cond_i = graph.entries().iter().find(|e| e.position == 2).unwrap();
        // second pass links the condition to the definition inside the body
        assert_eq!(cond_i.source_positions, [7]);
    }

    #[test]
    fn stable_under_whitespace() {
        let a = extract_dataflow(&parse("int s=0;for(int i=0;i<n;i++){s+=a[i];}", LanguageId::Java), LanguageId::Java);
        let b = extract_dataflow(
            &parse("int s = 0;\nfor (int i = 0; i < n; i++) {\n  s += a[i];\n}\n", LanguageId::Java),
            LanguageId::Java,
        );
        assert_eq!(a, b);
    }
}
