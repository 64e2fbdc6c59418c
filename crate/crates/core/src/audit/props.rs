//! Required (RS) and verified (VS) safety-property sets per graph node, and
//! formula evaluation over them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AuditFormula, SetKind};
use crate::facts::{parse_safety_annotation, CrateFacts, FunctionKind, SafetyPropertySet};
use crate::upg::{NodeCategory, UpgGraph};

/// Annotations for callees the source frontend cannot see (standard library,
/// other crates) or verified sets supplied by a reviewer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationDb {
    #[serde(default)]
    pub required: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub verified: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Error)]
pub enum AnnotationDbError {
    #[error("malformed annotation database: {0}")]
    Malformed(String),
}

impl AnnotationDb {
    /// Accepts `{"required": {..}, "verified": {..}}` or a flat `{path: [tags]}`
    /// map of required sets.
    pub fn from_json(text: &str) -> Result<Self, AnnotationDbError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| AnnotationDbError::Malformed(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| AnnotationDbError::Malformed("top level must be an object".into()))?;
        let structured = !obj.is_empty() && obj.keys().all(|k| k == "required" || k == "verified");
        if structured {
            serde_json::from_value(value).map_err(|e| AnnotationDbError::Malformed(e.to_string()))
        } else {
            let required = serde_json::from_value(value)
                .map_err(|e| AnnotationDbError::Malformed(e.to_string()))?;
            Ok(AnnotationDb {
                required,
                verified: BTreeMap::new(),
            })
        }
    }
}

/// Node id -> RS / VS. A missing entry means the set is Absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropertyTable {
    pub required: BTreeMap<String, SafetyPropertySet>,
    pub verified: BTreeMap<String, SafetyPropertySet>,
}

impl PropertyTable {
    pub fn rs(&self, node: &str) -> Option<&SafetyPropertySet> {
        self.required.get(node)
    }

    pub fn vs(&self, node: &str) -> Option<&SafetyPropertySet> {
        self.verified.get(node)
    }

    pub fn set_rs<'a>(&mut self, node: &str, tags: impl IntoIterator<Item = &'a str>) {
        self.required
            .insert(node.to_string(), SafetyPropertySet::from_tags(tags));
    }

    pub fn set_vs<'a>(&mut self, node: &str, tags: impl IntoIterator<Item = &'a str>) {
        self.verified
            .insert(node.to_string(), SafetyPropertySet::from_tags(tags));
    }

    fn get(&self, kind: SetKind, node: &str) -> Option<&SafetyPropertySet> {
        match kind {
            SetKind::Rs => self.rs(node),
            SetKind::Vs => self.vs(node),
        }
    }

    /// RS from `# Safety` docs of unsafe crate functions (trait impls fall
    /// back to their declaration), RS/VS of everything else from `db`, and
    /// empty sets for literal constructors.
    pub fn build(facts: &CrateFacts, graph: &UpgGraph, db: &AnnotationDb) -> Self {
        let mut t = PropertyTable::default();
        let decl_of: BTreeMap<&str, &str> = facts
            .traits
            .iter()
            .flat_map(|tr| {
                tr.impls
                    .iter()
                    .flat_map(|i| i.methods.iter().map(|(d, m)| (m.as_str(), d.as_str())))
            })
            .collect();
        for f in &facts.functions {
            if !f.declared_unsafe {
                continue;
            }
            let own = f.safety_doc.as_deref().and_then(parse_safety_annotation);
            let inherited = || {
                let decl = decl_of.get(f.id.as_str())?;
                facts
                    .function(decl)?
                    .safety_doc
                    .as_deref()
                    .and_then(parse_safety_annotation)
            };
            let from_decl = (own.is_none() && f.kind != FunctionKind::TraitMethodDecl)
                .then(inherited)
                .flatten();
            if let Some(rs) = own.or(from_decl) {
                t.required.insert(f.id.clone(), rs);
            }
        }
        for n in &graph.nodes {
            if n.category == NodeCategory::Cl {
                t.required.insert(n.id.clone(), SafetyPropertySet::new());
                t.verified.insert(n.id.clone(), SafetyPropertySet::new());
            }
        }
        for (k, tags) in &db.required {
            t.required
                .insert(k.clone(), SafetyPropertySet::from_tags(tags));
        }
        for (k, tags) in &db.verified {
            t.verified
                .insert(k.clone(), SafetyPropertySet::from_tags(tags));
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Tags the safe constructor verifies that the unsafe one does not cover.
    UnsafeSideMissing,
    /// Tags the unsafe constructor covers that the safe one does not verify.
    SafeSideMissing,
    BothSidesMissing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated {
        missing: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Direction>,
    },
    Unverifiable {
        reason: String,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated { .. } => "violated",
            Verdict::Unverifiable { .. } => "unverifiable",
        }
    }

    fn violated(missing: SafetyPropertySet) -> Verdict {
        Verdict::Violated {
            missing: missing.into_vec(),
            direction: None,
        }
    }
}

pub const UNANNOTATED_CALLEE: &str = "callee lacks safety annotation";

pub fn evaluate_formula(f: &AuditFormula, props: &PropertyTable) -> Verdict {
    let mut required = SafetyPropertySet::new();
    for term in &f.required {
        match props.get(term.set, &term.node) {
            Some(s) => required = required.union(s),
            None => {
                return Verdict::Unverifiable {
                    reason: UNANNOTATED_CALLEE.into(),
                }
            }
        }
    }
    let mut available = SafetyPropertySet::new();
    for term in &f.available {
        if let Some(s) = props.get(term.set, &term.node) {
            available = available.union(s);
        }
    }
    let missing = required.difference(&available);
    if missing.is_empty() {
        Verdict::Satisfied
    } else {
        Verdict::violated(missing)
    }
}

/// `VS(cs) ≡ VS(cu) ∪ RS(cu)` as two-way inclusion.
pub fn constructor_pair_verdict(
    props: &PropertyTable,
    safe_ctor: &str,
    unsafe_ctor: &str,
) -> Verdict {
    let (Some(vs_cs), Some(rs_cu)) = (props.vs(safe_ctor), props.rs(unsafe_ctor)) else {
        let which = if props.vs(safe_ctor).is_none() {
            format!("VS({safe_ctor}) is absent")
        } else {
            format!("RS({unsafe_ctor}) is absent")
        };
        return Verdict::Unverifiable { reason: which };
    };
    let covered = props
        .vs(unsafe_ctor)
        .cloned()
        .unwrap_or_default()
        .union(rs_cu);
    let unsafe_missing = vs_cs.difference(&covered);
    let safe_missing = covered.difference(vs_cs);
    let direction = match (unsafe_missing.is_empty(), safe_missing.is_empty()) {
        (true, true) => return Verdict::Satisfied,
        (false, true) => Direction::UnsafeSideMissing,
        (true, false) => Direction::SafeSideMissing,
        (false, false) => Direction::BothSidesMissing,
    };
    Verdict::Violated {
        missing: unsafe_missing.union(&safe_missing).into_vec(),
        direction: Some(direction),
    }
}

/// `RS(callee) ⊆ (VS(cs) ∩ (VS(cu) ∪ RS(cu))) ∪ VS(m)`
pub fn combined_verdict(
    props: &PropertyTable,
    callee: &str,
    method: &str,
    safe_ctor: &str,
    unsafe_ctor: &str,
) -> Verdict {
    let Some(rs) = props.rs(callee) else {
        return Verdict::Unverifiable {
            reason: UNANNOTATED_CALLEE.into(),
        };
    };
    let empty = SafetyPropertySet::new();
    let vs_cs = props.vs(safe_ctor).unwrap_or(&empty);
    let cu_side = props
        .vs(unsafe_ctor)
        .unwrap_or(&empty)
        .union(props.rs(unsafe_ctor).unwrap_or(&empty));
    let available = vs_cs
        .intersection(&cu_side)
        .union(props.vs(method).unwrap_or(&empty));
    let missing = rs.difference(&available);
    if missing.is_empty() {
        Verdict::Satisfied
    } else {
        Verdict::violated(missing)
    }
}
