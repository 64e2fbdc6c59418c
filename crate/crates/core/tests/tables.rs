mod common;

use std::collections::BTreeMap;

use common::{extract, report, union_find_cdf, union_find_component_edges, SOURCE_FIXTURES};
use unsafe_audit::audit::{
    extract_audit_units, AuditFormula, AuditUnit, IsolationType, PatternKind,
};
use unsafe_audit::report::stats::{check_distribution, pattern_distribution, subgraph_size_cdf};
use unsafe_audit::safety::{AnnotatedKind, CheckClass, CheckKind, HazardKind};
use unsafe_audit::uig::derive_uig;
use unsafe_audit::upg::build_upg;

#[test]
fn annotation_table_twelve_items() {
    let r = report("annotations12");
    let t = &r.annotations;
    let get = |k| {
        let row = t.row(k);
        (row.lacking, row.total)
    };
    assert_eq!(get(AnnotatedKind::Constructor), (2, 4));
    assert_eq!(get(AnnotatedKind::Function), (2, 4));
    assert_eq!(get(AnnotatedKind::Method), (1, 4));
    assert_eq!(t.total(), 12);
    assert_eq!(t.rows.iter().map(|r| r.lacking).sum::<usize>(), 5);
}

#[test]
fn check_distribution_six_units() {
    let r = report("checks6");
    let sfuf = r.check_distribution.row(PatternKind::SfUf);
    assert_eq!((sfuf.no, sfuf.yes, sfuf.unknown), (2, 3, 0));
    let smcs = r.check_distribution.row(PatternKind::SmCsUf);
    assert_eq!((smcs.no, smcs.yes, smcs.unknown), (0, 1, 0));
    for row in &r.check_distribution.rows {
        if !matches!(row.pattern, PatternKind::SfUf | PatternKind::SmCsUf) {
            assert_eq!(row.no + row.yes + row.unknown, 0, "{}", row.label);
        }
    }
    assert_eq!(r.pattern_distribution.total, 6);
    assert_eq!(r.pattern_distribution.via_literal, 1);
    let u = r
        .units
        .iter()
        .find(|u| u.unit.caller.ends_with("::fixed"))
        .unwrap();
    assert_eq!(u.check.kind, CheckKind::DirectCheck);
}

#[test]
fn nocheck_ratio_two_fifths() {
    let r = report("nocheck5");
    let v = &r.nocheck_visibility;
    assert_eq!(v.nocheck_function_units, 5);
    assert_eq!(v.non_public, 2);
    assert!((v.ratio.unwrap() - 0.4).abs() < 1e-12);
    let subjects: Vec<&str> = r
        .hazards
        .iter()
        .filter(|h| h.kind == HazardKind::NoCheckNonPublic)
        .map(|h| h.subject.as_str())
        .collect();
    assert_eq!(subjects, vec!["nocheck5::d", "nocheck5::e"]);
}

#[test]
fn findings_sorted_by_code() {
    let r = report("findings2");
    let codes: Vec<&str> = r.hazards.iter().map(|h| h.code.as_str()).collect();
    assert_eq!(codes, vec!["H001", "H003"]);
    assert!(r.hazards[0].subject.ends_with("raw_read"));
    assert!(r.hazards[1].subject.ends_with("relay"));
    assert!(!r.is_clean());
}

fn unit(caller: &str, callee: &str, ctor: Option<&str>, pattern: PatternKind) -> AuditUnit {
    AuditUnit {
        unit_id: format!("{caller} -> {callee} {ctor:?}"),
        caller: caller.into(),
        callee: callee.into(),
        caller_ctor: ctor.map(String::from),
        callee_ctor: None,
        pattern,
        isolation: pattern.isolation(),
        formula: AuditFormula {
            required: vec![],
            available: vec![],
            rendering: pattern.rendering().into(),
        },
        via_literal: false,
        call_sites: vec![0],
    }
}

#[test]
fn pattern_distribution_counts() {
    let units = vec![
        unit("a", "x", None, PatternKind::SfUf),
        unit("b", "x", None, PatternKind::SfUf),
        unit("m", "x", Some("c"), PatternKind::SmCuUf),
    ];
    let d = pattern_distribution("k", &units);
    assert_eq!(d.count(PatternKind::SfUf), 2);
    assert_eq!(d.count(PatternKind::SmCuUf), 1);
    assert_eq!(d.total, 3);
    assert_eq!(d.rows.len(), 9);
    assert_eq!(d.rows.iter().map(|r| r.count).sum::<usize>(), 3);
    assert_eq!(units[2].isolation, IsolationType::Half);

    let classes: BTreeMap<String, CheckClass> = BTreeMap::new();
    let c = check_distribution(&units, &classes);
    assert_eq!(
        c.rows
            .iter()
            .map(|r| r.no + r.yes + r.unknown)
            .sum::<usize>(),
        3
    );
}

#[test]
fn graph30_components_match_union_find() {
    let facts = extract("graph30").facts;
    let g = build_upg(&facts);
    assert_eq!(g.nodes.len(), 30);
    let cdf = subgraph_size_cdf(&g);
    let got: Vec<(usize, f64)> = cdf.points.iter().map(|p| (p.edges, p.fraction)).collect();
    let want = union_find_cdf(&g);
    assert_eq!(got.len(), want.len());
    for (a, b) in got.iter().zip(&want) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() < 1e-12);
    }
    assert_eq!(cdf.components.len(), union_find_component_edges(&g).len());
    assert_eq!(cdf.components.iter().map(|c| c.nodes).sum::<usize>(), 30);
    assert_eq!(
        cdf.components.iter().map(|c| c.edges).sum::<usize>(),
        g.edges.len()
    );
}

#[test]
fn stats_consistent_on_all_fixtures() {
    for name in SOURCE_FIXTURES {
        let facts = extract(name).facts;
        let upg = build_upg(&facts);
        let units = extract_audit_units(&derive_uig(&upg));
        let r = report(name);
        let d = &r.pattern_distribution;
        assert_eq!(
            d.total,
            units.iter().filter(|u| !u.via_literal).count(),
            "{name}"
        );
        assert_eq!(
            d.via_literal,
            units.iter().filter(|u| u.via_literal).count(),
            "{name}"
        );
        assert_eq!(
            d.rows.iter().map(|r| r.count).sum::<usize>(),
            d.total,
            "{name}"
        );
        let checked: usize = r
            .check_distribution
            .rows
            .iter()
            .map(|r| r.no + r.yes + r.unknown)
            .sum();
        assert_eq!(checked, d.total, "{name}");
        let declared = facts.functions.iter().filter(|f| f.declared_unsafe).count();
        assert_eq!(r.annotations.total(), declared, "{name}");
        assert!(
            r.annotations.rows.iter().all(|r| r.lacking <= r.total),
            "{name}"
        );
    }
}
