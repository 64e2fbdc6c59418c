//! Audit units: one safe caller, one unsafe callee, and the constructors
//! that produced them, each tagged with its structural pattern and formula.

pub mod props;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use props::{
    combined_verdict, constructor_pair_verdict, evaluate_formula, AnnotationDb, AnnotationDbError,
    Direction, PropertyTable, Verdict, UNANNOTATED_CALLEE,
};

use crate::facts::{CrateFacts, StructFact};
use crate::upg::{EdgeKind, NodeCategory, UigGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolationType {
    Direct,
    Indirect,
    Half,
    Open,
}

impl IsolationType {
    pub const ALL: [IsolationType; 4] = [
        IsolationType::Direct,
        IsolationType::Indirect,
        IsolationType::Half,
        IsolationType::Open,
    ];
}

impl fmt::Display for IsolationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IsolationType::Direct => "direct",
            IsolationType::Indirect => "indirect",
            IsolationType::Half => "half",
            IsolationType::Open => "open",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    SfUf,
    SfUmCs,
    SmCsUf,
    SmCsUmCs,
    SmCuUf,
    SfUmCu,
    SmCsUmCu,
    SmCuUmCs,
    SmCuUmCu,
}

impl PatternKind {
    pub const ALL: [PatternKind; 9] = [
        PatternKind::SfUf,
        PatternKind::SfUmCs,
        PatternKind::SmCsUf,
        PatternKind::SmCsUmCs,
        PatternKind::SmCuUf,
        PatternKind::SfUmCu,
        PatternKind::SmCsUmCu,
        PatternKind::SmCuUmCs,
        PatternKind::SmCuUmCu,
    ];

    pub fn isolation(self) -> IsolationType {
        use PatternKind::*;
        match self {
            SfUf | SfUmCs => IsolationType::Direct,
            SmCsUf | SmCsUmCs => IsolationType::Indirect,
            SmCuUf | SfUmCu | SmCsUmCu | SmCuUmCs => IsolationType::Half,
            SmCuUmCu => IsolationType::Open,
        }
    }

    /// Column label, e.g. `sm(uc)-um(sc)`.
    pub fn label(self) -> &'static str {
        use PatternKind::*;
        match self {
            SfUf => "sf-uf",
            SfUmCs => "sf-um(sc)",
            SmCsUf => "sm(sc)-uf",
            SmCsUmCs => "sm(sc)-um(sc)",
            SmCuUf => "sm(uc)-uf",
            SfUmCu => "sf-um(uc)",
            SmCsUmCu => "sm(sc)-um(uc)",
            SmCuUmCs => "sm(uc)-um(sc)",
            SmCuUmCu => "sm(uc)-um(uc)",
        }
    }

    /// Canonical formula text with role names.
    pub fn rendering(self) -> &'static str {
        use PatternKind::*;
        match self {
            SfUf => "RS(uf) ⊆ VS(sf)",
            SfUmCs => "RS(um) ⊆ VS(sf)",
            SmCsUf => "RS(uf) ⊆ VS(sm) ∪ VS(cs)",
            SmCsUmCs => "RS(um) ⊆ VS(sm) ∪ VS(c1s)",
            SmCuUf => "RS(uf) ⊆ VS(sm) ∪ RS(cu) ∪ VS(cu)",
            SfUmCu => "RS(um) ⊆ VS(sf)",
            SmCsUmCu => "RS(um) ⊆ VS(sm) ∪ VS(c1s)",
            SmCuUmCs => "RS(um) ⊆ VS(sm) ∪ RS(c1u) ∪ VS(c1u)",
            SmCuUmCu => "RS(um) ⊆ VS(sm) ∪ RS(c1u) ∪ VS(c1u)",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Rs,
    Vs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaTerm {
    pub set: SetKind,
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFormula {
    pub required: Vec<FormulaTerm>,
    pub available: Vec<FormulaTerm>,
    pub rendering: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditUnit {
    pub unit_id: String,
    pub caller: String,
    pub callee: String,
    pub caller_ctor: Option<String>,
    pub callee_ctor: Option<String>,
    pub pattern: PatternKind,
    pub isolation: IsolationType,
    pub formula: AuditFormula,
    /// Reached through a literal constructor; kept out of pattern statistics.
    pub via_literal: bool,
    /// Indexes into the caller's call sites that produce this unit.
    pub call_sites: Vec<usize>,
}

/// Categories of a unit before classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitSkeleton {
    pub caller: NodeCategory,
    pub callee: NodeCategory,
    pub caller_ctor: Option<NodeCategory>,
    pub callee_ctor: Option<NodeCategory>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("invalid unit combination: {0}")]
    InvalidCombination(String),
}

fn ctor_is_unsafe(c: NodeCategory) -> Result<bool, ClassifyError> {
    match c {
        NodeCategory::Cs => Ok(false),
        NodeCategory::Cu | NodeCategory::Cl => Ok(true),
        other => Err(ClassifyError::InvalidCombination(format!(
            "{} is not a constructor",
            other.label()
        ))),
    }
}

/// Role terms for the caller/callee ends; `None` constructor means the node
/// acts as a plain function.
pub fn classify_pattern(s: &UnitSkeleton) -> Result<PatternKind, ClassifyError> {
    use NodeCategory::*;
    let bad = |m: &str| Err(ClassifyError::InvalidCombination(m.to_string()));
    if s.caller.is_unsafe() || s.caller == Cl {
        return bad("caller must be safe");
    }
    if !s.callee.is_unsafe() {
        return bad("callee must be unsafe");
    }
    if s.caller_ctor.is_some() && s.caller != Sm {
        return bad("caller constructor given for a non-method caller");
    }
    if s.callee_ctor.is_some() && s.callee != Um {
        return bad("callee constructor given for a non-method callee");
    }
    let caller_side = s.caller_ctor.map(ctor_is_unsafe).transpose()?;
    let callee_side = s.callee_ctor.map(ctor_is_unsafe).transpose()?;
    use PatternKind::*;
    Ok(match (caller_side, callee_side) {
        (None, None) => SfUf,
        (None, Some(false)) => SfUmCs,
        (None, Some(true)) => SfUmCu,
        (Some(false), None) => SmCsUf,
        (Some(false), Some(false)) => SmCsUmCs,
        (Some(false), Some(true)) => SmCsUmCu,
        (Some(true), None) => SmCuUf,
        (Some(true), Some(false)) => SmCuUmCs,
        (Some(true), Some(true)) => SmCuUmCu,
    })
}

/// Formula terms for a classified unit.
pub fn instantiate_formula(
    pattern: PatternKind,
    caller: &str,
    callee: &str,
    caller_ctor: Option<&str>,
) -> AuditFormula {
    use PatternKind::*;
    let rs = |n: &str| FormulaTerm {
        set: SetKind::Rs,
        node: n.to_string(),
    };
    let vs = |n: &str| FormulaTerm {
        set: SetKind::Vs,
        node: n.to_string(),
    };
    let mut available = vec![vs(caller)];
    if let Some(c) = caller_ctor {
        match pattern {
            SmCsUf | SmCsUmCs | SmCsUmCu => available.push(vs(c)),
            SmCuUf | SmCuUmCs | SmCuUmCu => {
                available.push(rs(c));
                available.push(vs(c));
            }
            _ => {}
        }
    }
    AuditFormula {
        required: vec![rs(callee)],
        available,
        rendering: pattern.rendering().to_string(),
    }
}

pub fn unit_id(
    caller: &str,
    callee: &str,
    caller_ctor: Option<&str>,
    callee_ctor: Option<&str>,
) -> String {
    let mut s = caller.to_string();
    if let Some(c) = caller_ctor {
        s.push_str(&format!(" [{c}]"));
    }
    s.push_str(" -> ");
    s.push_str(callee);
    if let Some(c) = callee_ctor {
        s.push_str(&format!(" [{c}]"));
    }
    s
}

fn ctor_choices(uig: &UigGraph, method: &str) -> Vec<(String, NodeCategory)> {
    let mut out: Vec<(String, NodeCategory)> = uig
        .incoming(method, EdgeKind::ObjFlow)
        .filter_map(|e| uig.node(&e.from).map(|n| (n.id.clone(), n.category)))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Every (safe caller, unsafe callee, caller constructor, callee constructor)
/// combination, one unit each regardless of how many call sites produce it.
pub fn extract_audit_units(uig: &UigGraph) -> Vec<AuditUnit> {
    let mut units: BTreeMap<(String, String, Option<String>, Option<String>), AuditUnit> =
        BTreeMap::new();
    for e in uig.edges.iter().filter(|e| e.kind == EdgeKind::Call) {
        let (Some(caller), Some(callee)) = (uig.node(&e.from), uig.node(&e.to)) else {
            continue;
        };
        if caller.category.is_unsafe()
            || caller.category == NodeCategory::Cl
            || !callee.category.is_unsafe()
        {
            continue;
        }
        // safe constructors act as plain safe functions when calling
        let caller_role = if caller.category == NodeCategory::Cs {
            NodeCategory::Sf
        } else {
            caller.category
        };
        let caller_ctors: Vec<Option<(String, NodeCategory)>> = if caller_role == NodeCategory::Sm {
            let c = ctor_choices(uig, &caller.id);
            if c.is_empty() {
                vec![None]
            } else {
                c.into_iter().map(Some).collect()
            }
        } else {
            vec![None]
        };
        let callee_ctors: Vec<Option<(String, NodeCategory)>> =
            if callee.category == NodeCategory::Um {
                let c = ctor_choices(uig, &callee.id);
                if c.is_empty() {
                    vec![None]
                } else {
                    c.into_iter().map(Some).collect()
                }
            } else {
                vec![None]
            };
        for cc in &caller_ctors {
            for ec in &callee_ctors {
                let skeleton = UnitSkeleton {
                    caller: if cc.is_some() {
                        NodeCategory::Sm
                    } else {
                        NodeCategory::Sf
                    },
                    callee: if ec.is_some() {
                        NodeCategory::Um
                    } else {
                        NodeCategory::Uf
                    },
                    caller_ctor: cc.as_ref().map(|c| c.1),
                    callee_ctor: ec.as_ref().map(|c| c.1),
                };
                let Ok(pattern) = classify_pattern(&skeleton) else {
                    continue;
                };
                let cc_id = cc.as_ref().map(|c| c.0.clone());
                let ec_id = ec.as_ref().map(|c| c.0.clone());
                let key = (
                    caller.id.clone(),
                    callee.id.clone(),
                    cc_id.clone(),
                    ec_id.clone(),
                );
                let via_literal = cc.as_ref().is_some_and(|c| c.1 == NodeCategory::Cl)
                    || ec.as_ref().is_some_and(|c| c.1 == NodeCategory::Cl);
                let unit = units.entry(key).or_insert_with(|| AuditUnit {
                    unit_id: unit_id(&caller.id, &callee.id, cc_id.as_deref(), ec_id.as_deref()),
                    caller: caller.id.clone(),
                    callee: callee.id.clone(),
                    caller_ctor: cc_id.clone(),
                    callee_ctor: ec_id.clone(),
                    pattern,
                    isolation: pattern.isolation(),
                    formula: instantiate_formula(pattern, &caller.id, &callee.id, cc_id.as_deref()),
                    via_literal,
                    call_sites: Vec::new(),
                });
                if let Some(i) = e.call_site_index {
                    if !unit.call_sites.contains(&i) {
                        unit.call_sites.push(i);
                        unit.call_sites.sort_unstable();
                    }
                }
            }
        }
    }
    units.into_values().collect()
}

/// Maximal call chains through unsafe callers, e.g. `[sf, u1, u2]` when
/// `u1` itself calls `u2`. These need multi-hop review instead of a unit.
pub fn unsafe_chains(uig: &UigGraph) -> Vec<Vec<String>> {
    const LIMIT: usize = 10_000;
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in uig.edges.iter().filter(|e| e.kind == EdgeKind::Call) {
        succ.entry(e.from.as_str())
            .or_default()
            .insert(e.to.as_str());
    }
    let unsafe_node = |id: &str| uig.node(id).is_some_and(|n| n.category.is_unsafe());
    let mut out = Vec::new();
    for e in uig.edges.iter().filter(|e| e.kind == EdgeKind::Call) {
        if unsafe_node(&e.from) || !unsafe_node(&e.to) {
            continue;
        }
        let has_hop = succ
            .get(e.to.as_str())
            .is_some_and(|s| s.iter().any(|n| unsafe_node(n)));
        if !has_hop {
            continue;
        }
        let mut stack = vec![vec![e.from.as_str(), e.to.as_str()]];
        while let Some(path) = stack.pop() {
            if out.len() >= LIMIT {
                break;
            }
            let last = *path.last().unwrap();
            let next: Vec<&str> = succ
                .get(last)
                .map(|s| {
                    s.iter()
                        .copied()
                        .filter(|n| unsafe_node(n) && !path.contains(n))
                        .collect()
                })
                .unwrap_or_default();
            if next.is_empty() {
                out.push(path.iter().map(|s| s.to_string()).collect());
            }
            for n in next.into_iter().rev() {
                let mut p = path.clone();
                p.push(n);
                stack.push(p);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtorPairVerdict {
    pub safe_ctor: String,
    pub unsafe_ctor: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedVerdict {
    pub method: String,
    pub callee: String,
    pub safe_ctor: String,
    pub unsafe_ctor: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructorEquivalence {
    pub struct_path: String,
    pub pairs: Vec<CtorPairVerdict>,
    pub combined: Vec<CombinedVerdict>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EquivalenceError {
    #[error("`{0}` does not have both a safe and an unsafe constructor")]
    PreconditionUnmet(String),
}

/// Compare every safe/unsafe constructor pair of `s`, and evaluate the
/// combined formula for each safe method of `s` calling unsafe code in `uig`.
pub fn check_constructor_equivalence(
    s: &StructFact,
    facts: &CrateFacts,
    props: &PropertyTable,
    uig: &UigGraph,
) -> Result<ConstructorEquivalence, EquivalenceError> {
    let ctors: Vec<(&str, bool)> = s
        .constructor_ids
        .iter()
        .filter_map(|c| facts.function(c).map(|f| (c.as_str(), f.declared_unsafe)))
        .collect();
    let safe: Vec<&str> = ctors.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let unsafe_: Vec<&str> = ctors.iter().filter(|c| c.1).map(|c| c.0).collect();
    if safe.is_empty() || unsafe_.is_empty() {
        return Err(EquivalenceError::PreconditionUnmet(s.type_path.clone()));
    }
    let mut pairs = Vec::new();
    for cs in &safe {
        for cu in &unsafe_ {
            pairs.push(CtorPairVerdict {
                safe_ctor: cs.to_string(),
                unsafe_ctor: cu.to_string(),
                verdict: constructor_pair_verdict(props, cs, cu),
            });
        }
    }
    let mut combined = Vec::new();
    let methods = uig.nodes.iter().filter(|n| {
        n.category == NodeCategory::Sm && n.owner_type.as_deref() == Some(s.type_path.as_str())
    });
    for m in methods {
        let callees: BTreeSet<&str> = uig
            .outgoing(&m.id, EdgeKind::Call)
            .map(|e| e.to.as_str())
            .collect();
        for callee in callees {
            for cs in &safe {
                for cu in &unsafe_ {
                    combined.push(CombinedVerdict {
                        method: m.id.clone(),
                        callee: callee.to_string(),
                        safe_ctor: cs.to_string(),
                        unsafe_ctor: cu.to_string(),
                        verdict: combined_verdict(props, callee, &m.id, cs, cu),
                    });
                }
            }
        }
    }
    Ok(ConstructorEquivalence {
        struct_path: s.type_path.clone(),
        pairs,
        combined,
    })
}

/// Structs with both a safe and an unsafe constructor.
pub fn mixed_constructor_structs(facts: &CrateFacts) -> Vec<&StructFact> {
    facts
        .structs
        .iter()
        .filter(|s| {
            let kinds: BTreeSet<bool> = s
                .constructor_ids
                .iter()
                .filter_map(|c| facts.function(c))
                .map(|f| f.declared_unsafe)
                .collect();
            kinds.len() == 2
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeCategory::*;

    fn sk(
        caller: NodeCategory,
        cc: Option<NodeCategory>,
        callee: NodeCategory,
        ec: Option<NodeCategory>,
    ) -> UnitSkeleton {
        UnitSkeleton {
            caller,
            callee,
            caller_ctor: cc,
            callee_ctor: ec,
        }
    }

    #[test]
    fn nine_way_table() {
        let cases = [
            (sk(Sf, None, Uf, None), PatternKind::SfUf),
            (sk(Sf, None, Cu, None), PatternKind::SfUf),
            (sk(Sf, None, Um, Some(Cs)), PatternKind::SfUmCs),
            (sk(Sf, None, Um, Some(Cu)), PatternKind::SfUmCu),
            (sk(Sm, Some(Cs), Uf, None), PatternKind::SmCsUf),
            (sk(Sm, Some(Cs), Um, Some(Cs)), PatternKind::SmCsUmCs),
            (sk(Sm, Some(Cs), Um, Some(Cu)), PatternKind::SmCsUmCu),
            (sk(Sm, Some(Cu), Uf, None), PatternKind::SmCuUf),
            (sk(Sm, Some(Cu), Um, Some(Cs)), PatternKind::SmCuUmCs),
            (sk(Sm, Some(Cu), Um, Some(Cu)), PatternKind::SmCuUmCu),
        ];
        for (s, p) in cases {
            assert_eq!(classify_pattern(&s), Ok(p));
        }
        assert!(classify_pattern(&sk(Uf, None, Uf, None)).is_err());
        assert!(classify_pattern(&sk(Sf, Some(Cs), Uf, None)).is_err());
        assert!(classify_pattern(&sk(Sf, None, Sf, None)).is_err());
    }

    #[test]
    fn isolation_grouping() {
        use IsolationType::*;
        let got: Vec<IsolationType> = PatternKind::ALL.iter().map(|p| p.isolation()).collect();
        assert_eq!(
            got,
            vec![Direct, Direct, Indirect, Indirect, Half, Half, Half, Half, Open]
        );
    }

    #[test]
    fn formula_terms_follow_pattern() {
        let f = instantiate_formula(PatternKind::SmCuUf, "m", "u", Some("c"));
        assert_eq!(f.rendering, "RS(uf) ⊆ VS(sm) ∪ RS(cu) ∪ VS(cu)");
        assert_eq!(f.available.len(), 3);
        let f = instantiate_formula(PatternKind::SfUmCu, "f", "u", None);
        assert_eq!(
            f.available,
            vec![FormulaTerm {
                set: SetKind::Vs,
                node: "f".into()
            }]
        );
    }

    #[test]
    fn formula_evaluation() {
        let f = instantiate_formula(PatternKind::SfUf, "f", "u", None);
        let mut p = PropertyTable::default();
        assert_eq!(
            evaluate_formula(&f, &p),
            Verdict::Unverifiable {
                reason: UNANNOTATED_CALLEE.into()
            }
        );
        p.set_rs("u", []);
        assert_eq!(evaluate_formula(&f, &p), Verdict::Satisfied);
        p.set_rs("u", ["a", "b"]);
        p.set_vs("f", ["a"]);
        assert_eq!(
            evaluate_formula(&f, &p),
            Verdict::Violated {
                missing: vec!["b".into()],
                direction: None
            }
        );
    }

    #[test]
    fn constructor_pairs() {
        let mut p = PropertyTable::default();
        p.set_vs("cs", ["init_state"]);
        p.set_rs("cu", ["init_state"]);
        p.set_vs("cu", []);
        assert_eq!(constructor_pair_verdict(&p, "cs", "cu"), Verdict::Satisfied);
        p.set_vs("cs", ["a", "b"]);
        p.set_rs("cu", ["a"]);
        assert_eq!(
            constructor_pair_verdict(&p, "cs", "cu"),
            Verdict::Violated {
                missing: vec!["b".into()],
                direction: Some(Direction::UnsafeSideMissing)
            }
        );
    }
}
