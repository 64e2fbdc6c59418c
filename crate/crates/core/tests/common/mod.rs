#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::Rng;
use unsafe_audit::audit::{AnnotationDb, PatternKind};
use unsafe_audit::extract::{extract_facts, Extraction};
use unsafe_audit::pipeline::{analyze, AnalysisOptions, AuditReport};
use unsafe_audit::upg::{EdgeKind, NodeCategory, UpgEdge, UpgGraph, UpgNode};

pub const LISTINGS: [&str; 7] = [
    "listing1", "listing2", "listing3", "listing4", "listing5", "listing6", "listing7",
];
pub const SOURCE_FIXTURES: [&str; 13] = [
    "listing1",
    "listing2",
    "listing3",
    "listing4",
    "listing5",
    "listing6",
    "listing7",
    "nine_patterns",
    "annotations12",
    "checks6",
    "nocheck5",
    "findings2",
    "graph30",
];

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn extract(name: &str) -> Extraction {
    extract_facts(&fixture_dir(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn report(name: &str) -> AuditReport {
    analyze(
        &extract(name).facts,
        &AnnotationDb::default(),
        AnalysisOptions::default(),
    )
}

/// (caller, callee, caller ctor, callee ctor, pattern label)
pub type UnitKey = (String, String, Option<String>, Option<String>, String);

pub fn unit_keys(r: &AuditReport) -> BTreeSet<UnitKey> {
    r.units
        .iter()
        .map(|u| {
            let u = &u.unit;
            (
                u.caller.clone(),
                u.callee.clone(),
                u.caller_ctor.clone(),
                u.callee_ctor.clone(),
                u.pattern.label().to_string(),
            )
        })
        .collect()
}

/// Exhaustive enumeration over every ordered node pair and every pair of
/// constructor candidates.
pub fn brute_force_units(g: &UpgGraph) -> BTreeSet<UnitKey> {
    let has = |a: &str, b: &str, k: EdgeKind| {
        g.edges
            .iter()
            .any(|e| e.from == a && e.to == b && e.kind == k)
    };
    let ctors_of = |m: &UpgNode| -> Vec<Option<&UpgNode>> {
        let c: Vec<Option<&UpgNode>> = g
            .nodes
            .iter()
            .filter(|c| {
                matches!(
                    c.category,
                    NodeCategory::Cs | NodeCategory::Cu | NodeCategory::Cl
                )
            })
            .filter(|c| has(&c.id, &m.id, EdgeKind::ObjFlow))
            .map(Some)
            .collect();
        if c.is_empty() {
            vec![None]
        } else {
            c
        }
    };
    let mut out = BTreeSet::new();
    for a in &g.nodes {
        if !matches!(
            a.category,
            NodeCategory::Sf | NodeCategory::Sm | NodeCategory::Cs
        ) {
            continue;
        }
        for b in &g.nodes {
            if !matches!(
                b.category,
                NodeCategory::Uf | NodeCategory::Um | NodeCategory::Cu
            ) || !has(&a.id, &b.id, EdgeKind::Call)
            {
                continue;
            }
            let callers = if a.category == NodeCategory::Sm {
                ctors_of(a)
            } else {
                vec![None]
            };
            let callees = if b.category == NodeCategory::Um {
                ctors_of(b)
            } else {
                vec![None]
            };
            for cc in &callers {
                for ec in &callees {
                    let side = |c: &Option<&UpgNode>| match c.map(|c| c.category) {
                        Some(NodeCategory::Cs) => "(sc)",
                        Some(_) => "(uc)",
                        None => "",
                    };
                    let label = format!(
                        "{}{}-{}{}",
                        if cc.is_some() { "sm" } else { "sf" },
                        side(cc),
                        if ec.is_some() { "um" } else { "uf" },
                        side(ec)
                    );
                    out.insert((
                        a.id.clone(),
                        b.id.clone(),
                        cc.map(|c| c.id.clone()),
                        ec.map(|c| c.id.clone()),
                        label,
                    ));
                }
            }
        }
    }
    out
}

pub fn pattern_by_label(label: &str) -> PatternKind {
    *PatternKind::ALL
        .iter()
        .find(|p| p.label() == label)
        .expect("known label")
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Edge counts per weakly connected component, via union-find.
pub fn union_find_component_edges(g: &UpgGraph) -> Vec<(usize, usize)> {
    let idx: BTreeMap<&str, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut parent: Vec<usize> = (0..g.nodes.len()).collect();
    for e in &g.edges {
        let (a, b) = (
            find(&mut parent, idx[e.from.as_str()]),
            find(&mut parent, idx[e.to.as_str()]),
        );
        if a != b {
            parent[a] = b;
        }
    }
    let mut nodes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut edges: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..g.nodes.len() {
        let r = find(&mut parent, i);
        *nodes.entry(r).or_default() += 1;
        edges.entry(r).or_default();
    }
    for e in &g.edges {
        *edges
            .entry(find(&mut parent, idx[e.from.as_str()]))
            .or_default() += 1;
    }
    nodes.keys().map(|r| (nodes[r], edges[r])).collect()
}

pub fn union_find_cdf(g: &UpgGraph) -> Vec<(usize, f64)> {
    let comps = union_find_component_edges(g);
    let mut xs: Vec<usize> = comps.iter().map(|c| c.1).collect();
    xs.sort_unstable();
    xs.dedup();
    xs.into_iter()
        .map(|x| {
            (
                x,
                comps.iter().filter(|c| c.1 <= x).count() as f64 / comps.len() as f64,
            )
        })
        .collect()
}

const CATEGORIES: [NodeCategory; 7] = [
    NodeCategory::Sf,
    NodeCategory::Sm,
    NodeCategory::Uf,
    NodeCategory::Um,
    NodeCategory::Cs,
    NodeCategory::Cu,
    NodeCategory::Cl,
];

/// A small graph of the shape `build_upg` produces: call edges only into
/// unsafe nodes, object flow only from constructors into methods.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> UpgGraph {
    let n = rng.random_range(1..=max_nodes);
    let nodes: Vec<UpgNode> = (0..n)
        .map(|i| {
            let category = CATEGORIES[rng.random_range(0..CATEGORIES.len())];
            UpgNode {
                id: format!("n{i:02}"),
                category,
                fact_id: format!("n{i:02}"),
                owner_type: None,
                external: false,
                literal_scope: None,
            }
        })
        .collect();
    let mut edges = BTreeSet::new();
    let density = rng.random_range(0.05..0.35);
    for a in &nodes {
        for b in &nodes {
            if a.id == b.id || !rng.random_bool(density) {
                continue;
            }
            if b.category.is_unsafe() && a.category != NodeCategory::Cl {
                edges.insert(UpgEdge {
                    from: a.id.clone(),
                    to: b.id.clone(),
                    kind: EdgeKind::Call,
                    call_site_index: Some(rng.random_range(0..3)),
                });
            } else if a.category.is_constructor() && b.category.is_method() {
                edges.insert(UpgEdge {
                    from: a.id.clone(),
                    to: b.id.clone(),
                    kind: EdgeKind::ObjFlow,
                    call_site_index: None,
                });
            }
        }
    }
    let mut g = UpgGraph {
        nodes,
        edges: edges.into_iter().collect(),
    };
    g.normalize();
    g
}
