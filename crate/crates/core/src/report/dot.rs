use std::fmt::Write;

use crate::upg::{short_label, EdgeKind, NodeCategory, UpgGraph};

/// Graphviz attributes per node category and edge kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotStyle {
    pub unsafe_fill: String,
    pub safe_fill: String,
    pub font: String,
}

impl Default for DotStyle {
    fn default() -> Self {
        DotStyle {
            unsafe_fill: "#e06666".into(),
            safe_fill: "#ffffff".into(),
            font: "Helvetica".into(),
        }
    }
}

impl DotStyle {
    pub fn shape(&self, c: NodeCategory) -> &'static str {
        match c {
            NodeCategory::Sf | NodeCategory::Uf => "box",
            NodeCategory::Sm | NodeCategory::Um => "ellipse",
            NodeCategory::Cs | NodeCategory::Cu | NodeCategory::Cl => "circle",
        }
    }

    pub fn fill(&self, c: NodeCategory) -> &str {
        if c.is_unsafe() {
            &self.unsafe_fill
        } else {
            &self.safe_fill
        }
    }

    pub fn node_style(&self, c: NodeCategory, external: bool) -> &'static str {
        match (c, external) {
            (NodeCategory::Cl, _) => "filled,dotted",
            (_, true) => "filled,dashed",
            _ => "filled",
        }
    }

    pub fn edge_style(&self, k: EdgeKind) -> &'static str {
        match k {
            EdgeKind::Call => "solid",
            EdgeKind::ObjFlow => "dashed",
        }
    }
}

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' | '\\' => {
                out.push('\\');
                out.push(ch);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

pub fn emit_dot(g: &UpgGraph, name: &str, style: &DotStyle) -> String {
    let mut nodes: Vec<_> = g.nodes.iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges: Vec<_> = g.edges.iter().collect();
    edges.sort();

    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quoted(name));
    let _ = writeln!(out, "  node [fontname={}];", quoted(&style.font));
    for n in nodes {
        let label = short_label(&n.id);
        let _ = writeln!(
            out,
            "  {} [label={}, tooltip={}, shape={}, style={}, fillcolor={}];",
            quoted(&n.id),
            quoted(label),
            quoted(&format!("{} ({})", n.id, n.category.label())),
            style.shape(n.category),
            quoted(style.node_style(n.category, n.external)),
            quoted(style.fill(n.category)),
        );
    }
    for e in edges {
        let _ = writeln!(
            out,
            "  {} -> {} [style={}];",
            quoted(&e.from),
            quoted(&e.to),
            style.edge_style(e.kind)
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_is_valid_digraph() {
        let dot = emit_dot(&UpgGraph::default(), "upg", &DotStyle::default());
        assert!(dot.starts_with("digraph \"upg\" {"));
        assert!(dot.ends_with("}\n"));
    }

    #[test]
    fn quoting() {
        assert_eq!(quoted(r#"a"b\c"#), r#""a\"b\\c""#);
    }
}
