//! Isolation graph: the propagation graph without caller-less unsafe nodes.

use std::collections::HashSet;

use crate::upg::{EdgeKind, NodeCategory, UigGraph, UpgGraph};

/// Remove `Uf`/`Um` nodes that nothing calls, repeating until stable, then
/// drop constructors left with no edges at all.
pub fn derive_uig(upg: &UpgGraph) -> UigGraph {
    let mut g = upg.clone();
    loop {
        let called: HashSet<&str> = g
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Call)
            .map(|e| e.to.as_str())
            .collect();
        let doomed: HashSet<String> = g
            .nodes
            .iter()
            .filter(|n| {
                matches!(n.category, NodeCategory::Uf | NodeCategory::Um)
                    && !called.contains(n.id.as_str())
            })
            .map(|n| n.id.clone())
            .collect();
        if doomed.is_empty() {
            break;
        }
        g.nodes.retain(|n| !doomed.contains(&n.id));
        g.edges
            .retain(|e| !doomed.contains(&e.from) && !doomed.contains(&e.to));
    }
    let touched: HashSet<&str> = g
        .edges
        .iter()
        .flat_map(|e| [e.from.as_str(), e.to.as_str()])
        .collect();
    let orphans: HashSet<String> = g
        .nodes
        .iter()
        .filter(|n| n.category.is_constructor() && !touched.contains(n.id.as_str()))
        .map(|n| n.id.clone())
        .collect();
    g.nodes.retain(|n| !orphans.contains(&n.id));
    g.normalize();
    g
}

/// Definition check: no `Uf`/`Um` node without an incoming call edge.
pub fn satisfies_isolation_invariant(g: &UigGraph) -> bool {
    g.nodes
        .iter()
        .filter(|n| matches!(n.category, NodeCategory::Uf | NodeCategory::Um))
        .all(|n| g.incoming(&n.id, EdgeKind::Call).next().is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upg::{UpgEdge, UpgNode};

    fn node(id: &str, category: NodeCategory) -> UpgNode {
        UpgNode {
            id: id.into(),
            category,
            fact_id: id.into(),
            owner_type: None,
            external: false,
            literal_scope: None,
        }
    }

    fn call(a: &str, b: &str) -> UpgEdge {
        UpgEdge {
            from: a.into(),
            to: b.into(),
            kind: EdgeKind::Call,
            call_site_index: Some(0),
        }
    }

    #[test]
    fn lone_unsafe_node_is_removed() {
        let g = UpgGraph {
            nodes: vec![node("u", NodeCategory::Uf)],
            edges: vec![],
        };
        assert!(derive_uig(&g).is_empty());
    }

    #[test]
    fn orphaned_chain_is_removed_to_fixpoint() {
        let mut g = UpgGraph {
            nodes: vec![
                node("s", NodeCategory::Sf),
                node("u1", NodeCategory::Uf),
                node("u2", NodeCategory::Uf),
                node("u3", NodeCategory::Uf),
            ],
            edges: vec![call("s", "u1"), call("u2", "u3")],
        };
        g.normalize();
        let uig = derive_uig(&g);
        let ids: Vec<&str> = uig.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, vec!["s", "u1"]);
        assert!(satisfies_isolation_invariant(&uig));
        assert_eq!(derive_uig(&uig), uig);
    }
}
