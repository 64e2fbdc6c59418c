//! Unsafety propagation graph: functions touching unsafe code, their unsafe
//! callees, and the constructors feeding every dynamic method.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use log::warn;
use proc_macro2::{Delimiter, TokenStream, TokenTree};
use serde::{Deserialize, Serialize};

use crate::facts::{
    last_segment, CallSiteFact, CalleeRef, CrateFacts, FunctionFact, FunctionKind, StructFact,
    Visibility,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeCategory {
    Sf,
    Sm,
    Uf,
    Um,
    Cs,
    Cu,
    Cl,
}

impl NodeCategory {
    pub fn is_unsafe(self) -> bool {
        matches!(self, NodeCategory::Uf | NodeCategory::Um | NodeCategory::Cu)
    }

    pub fn is_constructor(self) -> bool {
        matches!(self, NodeCategory::Cs | NodeCategory::Cu | NodeCategory::Cl)
    }

    pub fn is_method(self) -> bool {
        matches!(self, NodeCategory::Sm | NodeCategory::Um)
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeCategory::Sf => "Sf",
            NodeCategory::Sm => "Sm",
            NodeCategory::Uf => "Uf",
            NodeCategory::Um => "Um",
            NodeCategory::Cs => "Cs",
            NodeCategory::Cu => "Cu",
            NodeCategory::Cl => "Cl",
        }
    }

    pub fn of_function(f: &FunctionFact) -> NodeCategory {
        match (
            f.is_constructor,
            f.kind == FunctionKind::DynamicMethod,
            f.declared_unsafe,
        ) {
            (true, _, true) => NodeCategory::Cu,
            (true, _, false) => NodeCategory::Cs,
            (false, true, true) => NodeCategory::Um,
            (false, true, false) => NodeCategory::Sm,
            (false, false, true) => NodeCategory::Uf,
            (false, false, false) => NodeCategory::Sf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpgNode {
    pub id: String,
    pub category: NodeCategory,
    pub fact_id: String,
    pub owner_type: Option<String>,
    pub external: bool,
    /// Scope from which a literal constructor can be written (Cl nodes only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_scope: Option<Visibility>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Call,
    ObjFlow,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UpgEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
    pub call_site_index: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpgGraph {
    /// Sorted by id.
    pub nodes: Vec<UpgNode>,
    /// Sorted, without duplicates.
    pub edges: Vec<UpgEdge>,
}

/// The isolation graph has the same shape as the propagation graph.
pub type UigGraph = UpgGraph;

impl UpgGraph {
    pub fn node(&self, id: &str) -> Option<&UpgNode> {
        self.nodes
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn incoming<'a>(
        &'a self,
        id: &'a str,
        kind: EdgeKind,
    ) -> impl Iterator<Item = &'a UpgEdge> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.to == id && e.kind == kind)
    }

    pub fn outgoing<'a>(
        &'a self,
        id: &'a str,
        kind: EdgeKind,
    ) -> impl Iterator<Item = &'a UpgEdge> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.from == id && e.kind == kind)
    }

    /// Restore sorted, duplicate-free order after edits.
    pub fn normalize(&mut self) {
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        self.nodes.dedup_by(|a, b| a.id == b.id);
        self.edges.sort();
        self.edges.dedup();
    }

    /// Key-sorted JSON value of the graph.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("graph is always representable as JSON")
    }

    /// Structural problems: dangling endpoints, duplicate edges, bad categories.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ids: HashSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        let mut seen = HashSet::new();
        for e in &self.edges {
            if !ids.contains(e.from.as_str()) || !ids.contains(e.to.as_str()) {
                out.push(format!(
                    "edge {} -> {} has a missing endpoint",
                    e.from, e.to
                ));
                continue;
            }
            if !seen.insert(e) {
                out.push(format!("duplicate edge {} -> {}", e.from, e.to));
            }
            let from = self.node(&e.from).map(|n| n.category);
            let to = self.node(&e.to);
            match e.kind {
                EdgeKind::Call if !to.is_some_and(|n| n.category.is_unsafe()) => out.push(format!(
                    "call edge {} -> {} targets a safe node",
                    e.from, e.to
                )),
                EdgeKind::ObjFlow => {
                    let ok = from.is_some_and(NodeCategory::is_constructor)
                        && to.is_some_and(|n| n.category.is_method())
                        && self.node(&e.from).map(|n| &n.owner_type) == to.map(|n| &n.owner_type);
                    if !ok {
                        out.push(format!("obj-flow edge {} -> {} is malformed", e.from, e.to));
                    }
                }
                _ => {}
            }
        }
        out
    }
}

/// A resolved callee: a crate function or a path outside the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    Function(String),
    External(String),
}

impl NodeRef {
    pub fn id(&self) -> &str {
        match self {
            NodeRef::Function(s) | NodeRef::External(s) => s,
        }
    }
}

/// Functions carrying an unsafe marker: declared unsafe or containing an unsafe block.
pub fn graph_candidates(facts: &CrateFacts) -> Vec<&FunctionFact> {
    let bodyless = facts.bodyless_decls();
    facts
        .functions
        .iter()
        .filter(|f| {
            (f.declared_unsafe || f.contains_unsafe_block) && !bodyless.contains(f.id.as_str())
        })
        .collect()
}

/// All implementations a call site may reach. Unresolvable sites yield an
/// external node, or nothing for in-crate traits with no implementation.
pub fn resolve_callees(site: &CallSiteFact, facts: &CrateFacts) -> (Vec<NodeRef>, Option<String>) {
    match &site.callee_ref {
        CalleeRef::DirectPath { path } => match facts.function(path) {
            Some(f) => (vec![NodeRef::Function(f.id.clone())], None),
            None => (vec![NodeRef::External(path.clone())], None),
        },
        CalleeRef::TraitGenericMethod { trait_path, method } => {
            let Some(t) = facts.trait_fact(trait_path) else {
                let ext = site.callee_ref.to_string();
                return (
                    vec![NodeRef::External(ext.clone())],
                    Some(format!(
                        "trait `{trait_path}` is outside the crate; `{ext}` kept as external"
                    )),
                );
            };
            let decls: Vec<&String> = t
                .method_decls
                .iter()
                .filter(|d| facts.function(d).is_some_and(|f| &f.name == method))
                .collect();
            let mut out = BTreeSet::new();
            for d in &decls {
                if t.provided_methods.contains(d) {
                    out.insert(NodeRef::Function((*d).clone()));
                }
                for imp in &t.impls {
                    if let Some(id) = imp.methods.get(*d) {
                        out.insert(NodeRef::Function(id.clone()));
                    }
                }
            }
            let warning = out
                .is_empty()
                .then(|| format!("`{trait_path}::{method}` has no implementation in the crate"));
            (out.into_iter().collect(), warning)
        }
        CalleeRef::FunctionParam { param, signature } => {
            let matches: Vec<NodeRef> = graph_candidates(facts)
                .into_iter()
                .filter(|f| signatures_match(&f.signature(), signature))
                .map(|f| NodeRef::Function(f.id.clone()))
                .collect();
            if matches.is_empty() {
                let ext = site.callee_ref.to_string();
                (
                    vec![NodeRef::External(ext)],
                    Some(format!(
                        "no crate function matches `{signature}` for `{param}`"
                    )),
                )
            } else {
                (matches, None)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
    Group(Delimiter, Vec<Tok>),
}

fn toks(ts: TokenStream) -> Vec<Tok> {
    ts.into_iter()
        .map(|t| match t {
            TokenTree::Ident(i) => Tok::Word(i.to_string()),
            TokenTree::Literal(l) => Tok::Word(l.to_string()),
            TokenTree::Punct(p) => Tok::Punct(p.as_char()),
            TokenTree::Group(g) => Tok::Group(g.delimiter(), toks(g.stream())),
        })
        .collect()
}

fn is_wild(t: &Tok) -> bool {
    matches!(t, Tok::Word(w) if w == "_")
}

/// End (exclusive) of the type starting at `j`.
fn type_end(ts: &[Tok], mut j: usize) -> usize {
    let start = j;
    let mut depth = 0usize;
    while j < ts.len() {
        match &ts[j] {
            Tok::Punct('-') if matches!(ts.get(j + 1), Some(Tok::Punct('>'))) => {
                j += 2;
                continue;
            }
            Tok::Punct('<') => depth += 1,
            Tok::Punct('>') if depth == 0 => break,
            Tok::Punct('>') => depth -= 1,
            Tok::Punct(',') if depth == 0 && j > start => break,
            _ => {}
        }
        j += 1;
    }
    j.max((start + 1).min(ts.len()))
}

fn match_seq(a: &[Tok], b: &[Tok]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if is_wild(&a[i]) && !is_wild(&b[j]) {
            j = type_end(b, j);
            i += 1;
        } else if is_wild(&b[j]) && !is_wild(&a[i]) {
            i = type_end(a, i);
            j += 1;
        } else {
            let same = match (&a[i], &b[j]) {
                (Tok::Group(da, ga), Tok::Group(db, gb)) => da == db && match_seq(ga, gb),
                (x, y) => x == y,
            };
            if !same {
                return false;
            }
            i += 1;
            j += 1;
        }
    }
    i == a.len() && j == b.len()
}

/// Signature equality where `_` on either side stands for any single type.
pub fn signatures_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<TokenStream>(), b.parse::<TokenStream>()) {
        (Ok(x), Ok(y)) => match_seq(&toks(x), &toks(y)),
        _ => false,
    }
}

pub fn literal_ctor_id(type_path: &str) -> String {
    format!("{type_path} {{..}}")
}

/// The Cl node for a struct.
pub fn synthesize_literal_ctor(s: &StructFact) -> UpgNode {
    let id = literal_ctor_id(&s.type_path);
    UpgNode {
        fact_id: id.clone(),
        id,
        category: NodeCategory::Cl,
        owner_type: Some(s.type_path.clone()),
        external: false,
        literal_scope: Some(s.literal_constructible_from),
    }
}

fn function_node(f: &FunctionFact) -> UpgNode {
    UpgNode {
        id: f.id.clone(),
        category: NodeCategory::of_function(f),
        fact_id: f.id.clone(),
        owner_type: f.owner.clone(),
        external: false,
        literal_scope: None,
    }
}

fn external_node(path: &str) -> UpgNode {
    UpgNode {
        id: path.to_string(),
        category: NodeCategory::Uf,
        fact_id: path.to_string(),
        owner_type: None,
        external: true,
        literal_scope: None,
    }
}

pub fn build_upg(facts: &CrateFacts) -> UpgGraph {
    build_upg_with_warnings(facts).0
}

pub fn build_upg_with_warnings(facts: &CrateFacts) -> (UpgGraph, Vec<String>) {
    let mut nodes: BTreeMap<String, UpgNode> = BTreeMap::new();
    let mut edges: BTreeSet<UpgEdge> = BTreeSet::new();
    let mut warnings = Vec::new();

    for f in graph_candidates(facts) {
        nodes
            .entry(f.id.clone())
            .or_insert_with(|| function_node(f));
        for (i, site) in f.call_sites.iter().enumerate() {
            if !site.callee_is_unsafe {
                continue;
            }
            let (targets, warning) = resolve_callees(site, facts);
            if let Some(w) = warning {
                warn!("{}: {w}", f.id);
                warnings.push(format!("{}: {w}", f.id));
            }
            for t in targets {
                let node = match &t {
                    NodeRef::Function(id) => match facts.function(id) {
                        Some(g) => function_node(g),
                        None => continue,
                    },
                    NodeRef::External(p) => external_node(p),
                };
                if !node.category.is_unsafe() {
                    continue;
                }
                nodes.entry(node.id.clone()).or_insert(node);
                edges.insert(UpgEdge {
                    from: f.id.clone(),
                    to: t.id().to_string(),
                    kind: EdgeKind::Call,
                    call_site_index: Some(i),
                });
            }
        }
    }

    let owners: BTreeSet<String> = nodes
        .values()
        .filter(|n| n.category.is_method())
        .filter_map(|n| n.owner_type.clone())
        .collect();
    for owner in owners {
        let Some(s) = facts.struct_fact(&owner) else {
            continue;
        };
        let methods: Vec<String> = nodes
            .values()
            .filter(|n| n.category.is_method() && n.owner_type.as_deref() == Some(owner.as_str()))
            .map(|n| n.id.clone())
            .collect();
        let mut ctors: Vec<UpgNode> = s
            .constructor_ids
            .iter()
            .filter_map(|c| facts.function(c))
            .map(function_node)
            .collect();
        ctors.push(synthesize_literal_ctor(s));
        for c in ctors {
            for m in &methods {
                edges.insert(UpgEdge {
                    from: c.id.clone(),
                    to: m.clone(),
                    kind: EdgeKind::ObjFlow,
                    call_site_index: None,
                });
            }
            nodes.entry(c.id.clone()).or_insert(c);
        }
    }

    let graph = UpgGraph {
        nodes: nodes.into_values().collect(),
        edges: edges.into_iter().collect(),
    };
    (graph, warnings)
}

/// Display label of a node: its last path segment.
pub fn short_label(id: &str) -> &str {
    last_segment(id)
}
