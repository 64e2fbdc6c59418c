//! End-to-end analysis of one crate's facts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::audit::{
    check_constructor_equivalence, evaluate_formula, extract_audit_units,
    mixed_constructor_structs, unsafe_chains, AnnotationDb, AuditUnit, ConstructorEquivalence,
    PropertyTable, Verdict,
};
use crate::facts::{CrateFacts, Visibility};
use crate::report::stats::{
    check_distribution, pattern_distribution, subgraph_size_cdf, CheckDistribution,
    PatternDistribution, SubgraphSizeCdf,
};
use crate::safety::{
    annotation_table, classify_check, detect_literal_bypass, detect_missing_annotations,
    detect_nocheck_nonpublic, AnnotationTable, CheckClass, Hazard, NoCheckVisibility,
};
use crate::uig::derive_uig;
use crate::upg::{build_upg_with_warnings, UigGraph, UpgGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Keep units whose safe caller is not `pub`.
    pub include_private: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            include_private: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    #[serde(flatten)]
    pub unit: AuditUnit,
    pub formula_rendering: String,
    pub check: CheckClass,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    #[serde(rename = "crate")]
    pub crate_name: String,
    pub upg: UpgGraph,
    pub uig: UigGraph,
    pub units: Vec<UnitReport>,
    pub pattern_distribution: PatternDistribution,
    pub check_distribution: CheckDistribution,
    pub annotations: AnnotationTable,
    pub subgraph_cdf: SubgraphSizeCdf,
    pub nocheck_visibility: NoCheckVisibility,
    pub constructor_equivalence: Vec<ConstructorEquivalence>,
    pub unsafe_chains: Vec<Vec<String>>,
    pub hazards: Vec<Hazard>,
    pub warnings: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.hazards.is_empty()
    }

    pub fn unit(&self, id: &str) -> Option<&UnitReport> {
        self.units.iter().find(|u| u.unit.unit_id == id)
    }
}

pub fn analyze(facts: &CrateFacts, db: &AnnotationDb, opts: AnalysisOptions) -> AuditReport {
    let (upg, warnings) = build_upg_with_warnings(facts);
    let uig = derive_uig(&upg);
    let mut units = extract_audit_units(&uig);
    if !opts.include_private {
        units.retain(|u| {
            facts
                .function(&u.caller)
                .is_none_or(|f| f.visibility == Visibility::Public)
        });
    }
    log::info!(
        "{}: {} UPG nodes, {} UIG nodes, {} units",
        facts.crate_name,
        upg.nodes.len(),
        uig.nodes.len(),
        units.len()
    );

    let props = PropertyTable::build(facts, &upg, db);
    let checks: BTreeMap<String, CheckClass> = units
        .iter()
        .map(|u| (u.unit_id.clone(), classify_check(u, facts)))
        .collect();

    let mut hazards = detect_missing_annotations(facts, &units);
    for s in &facts.structs {
        hazards.extend(detect_literal_bypass(s, &units, facts));
    }
    let (nocheck, nocheck_visibility) = detect_nocheck_nonpublic(&units, &checks, facts);
    hazards.extend(nocheck);
    hazards.sort_by(|a, b| (&a.code, &a.subject).cmp(&(&b.code, &b.subject)));

    let constructor_equivalence = mixed_constructor_structs(facts)
        .into_iter()
        .filter_map(|s| check_constructor_equivalence(s, facts, &props, &uig).ok())
        .collect();

    let pattern_distribution = pattern_distribution(&facts.crate_name, &units);
    let check_distribution = check_distribution(&units, &checks);
    let unit_reports = units
        .into_iter()
        .map(|u| {
            let verdict = evaluate_formula(&u.formula, &props);
            let check = checks[&u.unit_id].clone();
            UnitReport {
                formula_rendering: u.formula.rendering.clone(),
                unit: u,
                check,
                verdict,
            }
        })
        .collect();

    AuditReport {
        crate_name: facts.crate_name.clone(),
        subgraph_cdf: subgraph_size_cdf(&upg),
        unsafe_chains: unsafe_chains(&uig),
        annotations: annotation_table(facts),
        upg,
        uig,
        units: unit_reports,
        pattern_distribution,
        check_distribution,
        nocheck_visibility,
        constructor_equivalence,
        hazards,
        warnings,
    }
}
