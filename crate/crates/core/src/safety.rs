//! Safety-check classification of audit units and encapsulation hazards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::audit::AuditUnit;
use crate::facts::{
    parse_safety_annotation, ArgSource, CalleeRef, CrateFacts, FunctionFact, FunctionKind,
    StructFact, Visibility,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    DirectCheck,
    NoCheck,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckReason {
    GlobalOrHardcoded,
    FixedValueFn,
    AssertOrIfValidated,
    FromCallerParams,
    Unvalidated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgCheck {
    pub index: usize,
    pub source: ArgSource,
    pub validated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckClass {
    pub kind: CheckKind,
    pub reason: Option<CheckReason>,
    pub per_argument: Vec<ArgCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckClass {
    fn unknown(note: String) -> Self {
        CheckClass {
            kind: CheckKind::Unknown,
            reason: None,
            per_argument: Vec::new(),
            note: Some(note),
        }
    }
}

fn severity_rank(k: CheckKind) -> u8 {
    match k {
        CheckKind::NoCheck => 2,
        CheckKind::Unknown => 1,
        CheckKind::DirectCheck => 0,
    }
}

const STATIC_MUT_PREFIX: &str = "<static mut ";

fn classify_site(
    caller: &FunctionFact,
    index: usize,
    unit: &AuditUnit,
    facts: &CrateFacts,
) -> CheckClass {
    let Some(site) = caller.call_sites.get(index) else {
        return CheckClass::unknown(format!("call site {index} of `{}` is missing", caller.id));
    };
    let expected_arity = match &site.callee_ref {
        CalleeRef::DirectPath { path } => facts.function(path).map(|f| f.params.len()),
        _ => facts.function(&unit.callee).map(|f| f.params.len()),
    };
    if expected_arity.is_some_and(|n| n != site.arg_flows.len()) {
        return CheckClass::unknown(format!(
            "no argument dataflow matching `{}`'s arity at call site {index}",
            unit.callee
        ));
    }
    let per_argument: Vec<ArgCheck> = site
        .arg_flows
        .iter()
        .enumerate()
        .map(|(i, f)| ArgCheck {
            index: i,
            source: f.source,
            validated: f.validated_by_branch_or_assert,
        })
        .collect();
    let note = unit
        .callee
        .strip_prefix(STATIC_MUT_PREFIX)
        .and_then(|r| r.strip_suffix('>'))
        .map(|p| format!("reads mutable global `{p}`"));
    let ok = |a: &ArgCheck| a.source.is_fixed() || a.validated;
    let (kind, reason) = if per_argument.iter().all(ok) {
        let reason = if per_argument.iter().any(|a| !a.source.is_fixed()) {
            CheckReason::AssertOrIfValidated
        } else if per_argument
            .iter()
            .any(|a| a.source == ArgSource::FixedValueFn)
        {
            CheckReason::FixedValueFn
        } else {
            CheckReason::GlobalOrHardcoded
        };
        (CheckKind::DirectCheck, reason)
    } else if per_argument
        .iter()
        .any(|a| !ok(a) && a.source == ArgSource::CallerParam)
    {
        (CheckKind::NoCheck, CheckReason::FromCallerParams)
    } else {
        (CheckKind::NoCheck, CheckReason::Unvalidated)
    };
    CheckClass {
        kind,
        reason: Some(reason),
        per_argument,
        note,
    }
}

/// Classify the unit from the argument provenance at its call sites; the
/// weakest site decides (no check, then unknown, then direct check).
pub fn classify_check(unit: &AuditUnit, facts: &CrateFacts) -> CheckClass {
    let Some(caller) = facts.function(&unit.caller) else {
        return CheckClass::unknown(format!("caller `{}` has no facts", unit.caller));
    };
    if unit.call_sites.is_empty() {
        return CheckClass::unknown(format!("unit `{}` has no call site", unit.unit_id));
    }
    unit.call_sites
        .iter()
        .map(|&i| classify_site(caller, i, unit, facts))
        .max_by_key(|c| severity_rank(c.kind))
        .expect("at least one call site")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    MissingAnnotation,
    LiteralBypass,
    NoCheckNonPublic,
}

impl HazardKind {
    pub fn code(self) -> &'static str {
        match self {
            HazardKind::MissingAnnotation => "H001",
            HazardKind::LiteralBypass => "H002",
            HazardKind::NoCheckNonPublic => "H003",
        }
    }
}

impl fmt::Display for HazardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HazardKind::MissingAnnotation => "missing-annotation",
            HazardKind::LiteralBypass => "literal-bypass",
            HazardKind::NoCheckNonPublic => "nocheck-nonpublic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hazard {
    pub code: String,
    pub kind: HazardKind,
    pub subject: String,
    pub evidence: String,
    pub related_units: Vec<String>,
    pub severity: Severity,
}

impl Hazard {
    fn new(
        kind: HazardKind,
        subject: &str,
        evidence: String,
        mut related_units: Vec<String>,
        severity: Severity,
    ) -> Self {
        related_units.sort();
        related_units.dedup();
        Hazard {
            code: kind.code().into(),
            kind,
            subject: subject.into(),
            evidence,
            related_units,
            severity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatedKind {
    Constructor,
    Function,
    Method,
}

impl AnnotatedKind {
    pub fn of(f: &FunctionFact) -> Self {
        if f.is_constructor {
            AnnotatedKind::Constructor
        } else if f.kind == FunctionKind::DynamicMethod {
            AnnotatedKind::Method
        } else {
            AnnotatedKind::Function
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub kind: AnnotatedKind,
    pub lacking: usize,
    pub total: usize,
}

/// Lacking / total counts of `# Safety` sections over declared-unsafe items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTable {
    pub rows: Vec<AnnotationRow>,
}

impl AnnotationTable {
    pub fn row(&self, kind: AnnotatedKind) -> AnnotationRow {
        self.rows
            .iter()
            .copied()
            .find(|r| r.kind == kind)
            .unwrap_or(AnnotationRow {
                kind,
                lacking: 0,
                total: 0,
            })
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.total).sum()
    }
}

/// Whether `f` has a `# Safety` section, its own or its trait declaration's.
pub fn is_annotated(f: &FunctionFact, facts: &CrateFacts) -> bool {
    if f.safety_doc
        .as_deref()
        .and_then(parse_safety_annotation)
        .is_some()
    {
        return true;
    }
    facts
        .traits
        .iter()
        .flat_map(|t| t.impls.iter().flat_map(|i| i.methods.iter()))
        .filter(|(_, imp)| *imp == &f.id)
        .filter_map(|(decl, _)| facts.function(decl))
        .any(|d| {
            d.safety_doc
                .as_deref()
                .and_then(parse_safety_annotation)
                .is_some()
        })
}

pub fn annotation_table(facts: &CrateFacts) -> AnnotationTable {
    let mut counts: BTreeMap<AnnotatedKind, (usize, usize)> = BTreeMap::new();
    for k in [
        AnnotatedKind::Constructor,
        AnnotatedKind::Function,
        AnnotatedKind::Method,
    ] {
        counts.insert(k, (0, 0));
    }
    for f in facts.functions.iter().filter(|f| f.declared_unsafe) {
        let e = counts.entry(AnnotatedKind::of(f)).or_default();
        e.1 += 1;
        if !is_annotated(f, facts) {
            e.0 += 1;
        }
    }
    AnnotationTable {
        rows: counts
            .into_iter()
            .map(|(kind, (lacking, total))| AnnotationRow {
                kind,
                lacking,
                total,
            })
            .collect(),
    }
}

/// H001 for every declared-unsafe crate item without a `# Safety` section.
pub fn detect_missing_annotations(facts: &CrateFacts, units: &[AuditUnit]) -> Vec<Hazard> {
    let mut out = Vec::new();
    for f in facts.functions.iter().filter(|f| f.declared_unsafe) {
        if is_annotated(f, facts) {
            continue;
        }
        let kind = AnnotatedKind::of(f);
        let related: Vec<String> = units
            .iter()
            .filter(|u| {
                u.callee == f.id
                    || u.caller_ctor.as_deref() == Some(&f.id)
                    || u.callee_ctor.as_deref() == Some(&f.id)
            })
            .map(|u| u.unit_id.clone())
            .collect();
        let what = match kind {
            AnnotatedKind::Constructor => "unsafe constructor",
            AnnotatedKind::Function => "unsafe function",
            AnnotatedKind::Method => "unsafe method",
        };
        let evidence = format!(
            "{what} `{}` has no `# Safety` section; required properties unknown",
            f.id
        );
        let severity = if kind == AnnotatedKind::Constructor {
            Severity::Warn
        } else {
            Severity::Info
        };
        out.push(Hazard::new(
            HazardKind::MissingAnnotation,
            &f.id,
            evidence,
            related,
            severity,
        ));
    }
    out
}

/// H002 when a struct's safe methods rely on constructor guarantees that a
/// literal `S { .. }` expression can skip.
pub fn detect_literal_bypass(
    s: &StructFact,
    units: &[AuditUnit],
    facts: &CrateFacts,
) -> Vec<Hazard> {
    let owned_by_s = |id: &str| {
        facts
            .function(id)
            .is_some_and(|f| f.owner.as_deref() == Some(s.type_path.as_str()))
    };
    let relying: Vec<&AuditUnit> = units
        .iter()
        .filter(|u| !u.via_literal && u.caller_ctor.is_some() && owned_by_s(&u.caller))
        .collect();
    if relying.is_empty() {
        return Vec::new();
    }
    let methods: BTreeSet<&str> = relying.iter().map(|u| u.caller.as_str()).collect();
    let mut related: Vec<String> = relying.iter().map(|u| u.unit_id.clone()).collect();
    related.extend(
        units
            .iter()
            .filter(|u| u.via_literal && methods.contains(u.caller.as_str()))
            .map(|u| u.unit_id.clone()),
    );
    let has_unsafe_ctor = s
        .constructor_ids
        .iter()
        .filter_map(|c| facts.function(c))
        .any(|f| f.declared_unsafe);
    let exposure = s.literal_constructible_from;
    let widened = match exposure {
        Visibility::ModulePrivate => "",
        Visibility::CrateVisible => "; any module of the crate can build it",
        Visibility::Public => "; downstream crates can build it",
    };
    let ctor_note = if has_unsafe_ctor {
        " including an unsafe constructor's requirements"
    } else {
        ""
    };
    let evidence = format!(
        "`{}` is literal-constructible from {exposure} scope{widened}; safe methods {} rely on constructor guarantees{ctor_note} that a literal bypasses",
        s.type_path,
        methods.iter().map(|m| format!("`{m}`")).collect::<Vec<_>>().join(", "),
    );
    let severity = if has_unsafe_ctor {
        Severity::Warn
    } else {
        Severity::Info
    };
    vec![Hazard::new(
        HazardKind::LiteralBypass,
        &s.type_path,
        evidence,
        related,
        severity,
    )]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoCheckVisibility {
    /// No-check units whose caller is a function rather than a method.
    pub nocheck_function_units: usize,
    pub non_public: usize,
    pub ratio: Option<f64>,
}

/// H003 per non-public caller with no-check units, plus the share of
/// no-check function units whose caller is non-public.
pub fn detect_nocheck_nonpublic(
    units: &[AuditUnit],
    checks: &BTreeMap<String, CheckClass>,
    facts: &CrateFacts,
) -> (Vec<Hazard>, NoCheckVisibility) {
    let mut by_caller: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let (mut fn_units, mut fn_nonpublic) = (0usize, 0usize);
    for u in units.iter().filter(|u| !u.via_literal) {
        if checks
            .get(&u.unit_id)
            .is_none_or(|c| c.kind != CheckKind::NoCheck)
        {
            continue;
        }
        let Some(caller) = facts.function(&u.caller) else {
            continue;
        };
        let non_public = caller.visibility != Visibility::Public;
        if caller.kind != FunctionKind::DynamicMethod {
            fn_units += 1;
            if non_public {
                fn_nonpublic += 1;
            }
        }
        if non_public {
            by_caller
                .entry(caller.id.as_str())
                .or_default()
                .push(u.unit_id.clone());
        }
    }
    let hazards = by_caller
        .into_iter()
        .map(|(caller, related)| {
            let vis = facts.function(caller).map(|f| f.visibility).unwrap_or(Visibility::ModulePrivate);
            let evidence = format!(
                "{vis} `{caller}` passes unchecked inputs to unsafe code in {} unit(s); soundness rests on its in-crate callers",
                related.len()
            );
            Hazard::new(HazardKind::NoCheckNonPublic, caller, evidence, related, Severity::Info)
        })
        .collect();
    let ratio = (fn_units > 0).then(|| fn_nonpublic as f64 / fn_units as f64);
    (
        hazards,
        NoCheckVisibility {
            nocheck_function_units: fn_units,
            non_public: fn_nonpublic,
            ratio,
        },
    )
}
