mod common;

use common::{extract, fixture_dir, report, SOURCE_FIXTURES};
use unsafe_audit::audit::{AnnotationDb, Verdict};
use unsafe_audit::facts::json::load_facts_str;
use unsafe_audit::facts::CrateFacts;
use unsafe_audit::pipeline::{analyze, AnalysisOptions};
use unsafe_audit::report::{
    render_report, render_report_named, report_json_value, ReportFormat, REPORT_SCHEMA,
};

fn validator() -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn fixture_reports_match_schema() {
    let v = validator();
    for name in SOURCE_FIXTURES {
        let value = report_json_value(&report(name));
        let errors: Vec<String> = v
            .iter_errors(&value)
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect();
        assert!(errors.is_empty(), "{name}: {errors:#?}");
    }
}

#[test]
fn empty_report_is_clean() {
    let r = analyze(
        &CrateFacts::empty("nothing"),
        &AnnotationDb::default(),
        AnalysisOptions::default(),
    );
    let value = report_json_value(&r);
    assert!(validator().is_valid(&value));
    assert_eq!(value["status"], "clean");
    assert_eq!(value["report_version"], "1");
    assert_eq!(value["tool"]["name"], "unsafe-audit");
    assert!(value["units"].as_array().unwrap().is_empty());
}

#[test]
fn findings_status() {
    let value = report_json_value(&report("findings2"));
    assert_eq!(value["status"], "findings");
    assert_eq!(value["hazards"][0]["code"], "H001");
}

#[test]
fn schema_rejects_unknown_fields() {
    let mut value = report_json_value(&report("listing1"));
    value
        .as_object_mut()
        .unwrap()
        .insert("extra".into(), 1.into());
    assert!(!validator().is_valid(&value));
}

#[test]
fn json_text_parses_back() {
    let r = report("listing5");
    let text = render_report(&r, ReportFormat::Json);
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, report_json_value(&r));
    assert!(render_report_named(&r, "yaml").is_err());
    assert_eq!(
        render_report_named(&r, "text").unwrap(),
        render_report(&r, ReportFormat::Text)
    );
}

#[test]
fn facts_input_gives_same_report() {
    let from_source = report("listing5");
    let text = std::fs::read_to_string(fixture_dir("listing5.facts.json")).unwrap();
    let facts = load_facts_str(&text).unwrap();
    assert_eq!(facts, extract("listing5").facts);
    let from_facts = analyze(&facts, &AnnotationDb::default(), AnalysisOptions::default());
    assert_eq!(
        render_report(&from_facts, ReportFormat::Json),
        render_report(&from_source, ReportFormat::Json)
    );
    assert_eq!(
        render_report(&from_facts, ReportFormat::Text),
        render_report(&from_source, ReportFormat::Text)
    );
}

#[test]
fn stripped_annotation_raises_h001() {
    let text = std::fs::read_to_string(fixture_dir("listing5_stripped.facts.json")).unwrap();
    let facts = load_facts_str(&text).unwrap();
    let r = analyze(&facts, &AnnotationDb::default(), AnalysisOptions::default());
    let h = r.hazards.iter().find(|h| h.code == "H001").expect("H001");
    assert_eq!(h.subject, "listing5::PhysAddr::new_unchecked");
    assert!(report("listing5").hazards.iter().all(|h| h.code != "H001"));
    let u = r
        .units
        .iter()
        .find(|u| u.unit.callee == "listing5::PhysAddr::new_unchecked")
        .unwrap();
    assert!(matches!(u.verdict, Verdict::Unverifiable { .. }));
}

#[test]
fn malformed_facts_are_rejected() {
    assert!(load_facts_str("{}").is_err());
    assert!(load_facts_str("not json").is_err());
    let text = std::fs::read_to_string(fixture_dir("listing5.facts.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["functions"][0]["kind"] = "nonsense".into();
    assert!(load_facts_str(&v.to_string()).is_err());
}
