use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::audit::{AuditUnit, PatternKind};
use crate::safety::{CheckClass, CheckKind};
use crate::upg::UpgGraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCount {
    pub pattern: PatternKind,
    pub label: String,
    pub count: usize,
}

/// Units per structural pattern. Units reached through a literal
/// constructor are counted apart in `via_literal`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternDistribution {
    #[serde(rename = "crate")]
    pub crate_name: String,
    pub rows: Vec<PatternCount>,
    pub total: usize,
    pub via_literal: usize,
}

impl PatternDistribution {
    pub fn count(&self, p: PatternKind) -> usize {
        self.rows
            .iter()
            .find(|r| r.pattern == p)
            .map_or(0, |r| r.count)
    }
}

pub fn pattern_distribution(crate_name: &str, units: &[AuditUnit]) -> PatternDistribution {
    let mut counts: BTreeMap<PatternKind, usize> = BTreeMap::new();
    let mut via_literal = 0;
    for u in units {
        if u.via_literal {
            via_literal += 1;
        } else {
            *counts.entry(u.pattern).or_default() += 1;
        }
    }
    let rows: Vec<PatternCount> = PatternKind::ALL
        .iter()
        .map(|&p| PatternCount {
            pattern: p,
            label: p.label().into(),
            count: counts.get(&p).copied().unwrap_or(0),
        })
        .collect();
    let total = rows.iter().map(|r| r.count).sum();
    PatternDistribution {
        crate_name: crate_name.to_string(),
        rows,
        total,
        via_literal,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRow {
    pub pattern: PatternKind,
    pub label: String,
    pub no: usize,
    pub yes: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckDistribution {
    pub rows: Vec<CheckRow>,
    pub unknown_total: usize,
}

impl CheckDistribution {
    pub fn row(&self, p: PatternKind) -> CheckRow {
        self.rows
            .iter()
            .find(|r| r.pattern == p)
            .cloned()
            .unwrap_or(CheckRow {
                pattern: p,
                label: p.label().into(),
                no: 0,
                yes: 0,
                unknown: 0,
            })
    }
}

/// "No" counts no-check units, "Yes" direct-check units; unknown stays apart.
pub fn check_distribution(
    units: &[AuditUnit],
    classes: &BTreeMap<String, CheckClass>,
) -> CheckDistribution {
    let mut rows: Vec<CheckRow> = PatternKind::ALL
        .iter()
        .map(|&p| CheckRow {
            pattern: p,
            label: p.label().into(),
            no: 0,
            yes: 0,
            unknown: 0,
        })
        .collect();
    for u in units.iter().filter(|u| !u.via_literal) {
        let row = rows
            .iter_mut()
            .find(|r| r.pattern == u.pattern)
            .expect("all patterns listed");
        match classes.get(&u.unit_id).map(|c| c.kind) {
            Some(CheckKind::NoCheck) => row.no += 1,
            Some(CheckKind::DirectCheck) => row.yes += 1,
            Some(CheckKind::Unknown) | None => row.unknown += 1,
        }
    }
    let unknown_total = rows.iter().map(|r| r.unknown).sum();
    CheckDistribution {
        rows,
        unknown_total,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentStats {
    /// Smallest node id in the component.
    pub root: String,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub edges: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphSizeCdf {
    pub points: Vec<CdfPoint>,
    pub components: Vec<ComponentStats>,
    /// Share of components with more than five edges.
    pub large_component_fraction: f64,
    /// Share of all nodes that sit in those components.
    pub large_component_node_fraction: f64,
}

pub const LARGE_COMPONENT_EDGES: usize = 5;

/// Weakly connected components of `g` and the CDF of their edge counts.
pub fn subgraph_size_cdf(g: &UpgGraph) -> SubgraphSizeCdf {
    let index: BTreeMap<&str, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.nodes.len()];
    for e in &g.edges {
        if let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut comp = vec![usize::MAX; g.nodes.len()];
    let mut count = 0;
    for start in 0..g.nodes.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = count;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }
    let mut components: Vec<ComponentStats> = (0..count)
        .map(|_| ComponentStats {
            root: String::new(),
            nodes: 0,
            edges: 0,
        })
        .collect();
    for (i, n) in g.nodes.iter().enumerate() {
        let c = &mut components[comp[i]];
        if c.nodes == 0 || n.id < c.root {
            c.root = n.id.clone();
        }
        c.nodes += 1;
    }
    for e in &g.edges {
        if let Some(&a) = index.get(e.from.as_str()) {
            components[comp[a]].edges += 1;
        }
    }
    components.sort_by(|a, b| a.root.cmp(&b.root));

    let total = components.len();
    let sizes: BTreeSet<usize> = components.iter().map(|c| c.edges).collect();
    let points = sizes
        .into_iter()
        .map(|e| CdfPoint {
            edges: e,
            fraction: components.iter().filter(|c| c.edges <= e).count() as f64 / total as f64,
        })
        .collect();
    let large: Vec<&ComponentStats> = components
        .iter()
        .filter(|c| c.edges > LARGE_COMPONENT_EDGES)
        .collect();
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    SubgraphSizeCdf {
        points,
        large_component_fraction: ratio(large.len(), total),
        large_component_node_fraction: ratio(large.iter().map(|c| c.nodes).sum(), g.nodes.len()),
        components,
    }
}
