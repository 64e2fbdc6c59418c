//! Tables, graph exports and rendered reports.

pub mod dot;
pub mod stats;

use std::fmt::Write;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use dot::{emit_dot, DotStyle};
pub use stats::{
    check_distribution, pattern_distribution, subgraph_size_cdf, CdfPoint, CheckDistribution,
    CheckRow, ComponentStats, PatternCount, PatternDistribution, SubgraphSizeCdf,
};

use crate::audit::{AuditFormula, FormulaTerm, SetKind, Verdict};
use crate::pipeline::AuditReport;
use crate::safety::AnnotatedKind;

pub const REPORT_VERSION: &str = "1";
pub const TOOL_NAME: &str = "unsafe-audit";
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

const WIDTH: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("unsupported report format `{0}` (expected text or json)")]
    UnsupportedFormat(String),
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(ReportError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Envelope<'a> {
    report_version: &'static str,
    tool: Tool,
    status: &'static str,
    #[serde(flatten)]
    report: &'a AuditReport,
}

pub fn render_report(report: &AuditReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => render_json(report),
        ReportFormat::Text => render_text(report),
    }
}

/// Like [`render_report`] with the format given by name.
pub fn render_report_named(report: &AuditReport, format: &str) -> Result<String, ReportError> {
    Ok(render_report(report, format.parse()?))
}

pub fn report_json_value(report: &AuditReport) -> serde_json::Value {
    serde_json::to_value(envelope(report)).expect("report serializes")
}

fn envelope(report: &AuditReport) -> Envelope<'_> {
    Envelope {
        report_version: REPORT_VERSION,
        tool: Tool {
            name: TOOL_NAME,
            version: env!("CARGO_PKG_VERSION"),
        },
        status: if report.is_clean() {
            "clean"
        } else {
            "findings"
        },
        report,
    }
}

fn render_json(report: &AuditReport) -> String {
    let mut s = serde_json::to_string_pretty(&envelope(report)).expect("report serializes");
    s.push('\n');
    s
}

fn term(t: &FormulaTerm) -> String {
    match t.set {
        SetKind::Rs => format!("RS({})", t.node),
        SetKind::Vs => format!("VS({})", t.node),
    }
}

/// The formula over concrete node ids.
pub fn instantiated(f: &AuditFormula) -> String {
    let side = |ts: &[FormulaTerm]| ts.iter().map(term).collect::<Vec<_>>().join(" ∪ ");
    format!("{} ⊆ {}", side(&f.required), side(&f.available))
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Satisfied => "satisfied".into(),
        Verdict::Violated { missing, direction } => {
            let mut s = format!("violated, missing {{{}}}", missing.join(", "));
            if let Some(d) = direction {
                let d = serde_json::to_value(d)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                s.push_str(&format!(" ({})", d.replace('_', " ")));
            }
            s
        }
        Verdict::Unverifiable { reason } => format!("unverifiable: {reason}"),
    }
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(|s| s.replace('_', " ")))
        .unwrap_or_default()
}

fn wrapped(out: &mut String, text: &str, indent: &str) {
    let opts = textwrap::Options::new(WIDTH)
        .initial_indent(indent)
        .subsequent_indent(indent);
    out.push_str(&textwrap::fill(text, opts));
    out.push('\n');
}

fn percent(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

fn render_text(r: &AuditReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{TOOL_NAME} {} report for `{}`",
        env!("CARGO_PKG_VERSION"),
        r.crate_name
    );
    let status = if r.is_clean() {
        "clean".to_string()
    } else {
        format!("{} finding(s)", r.hazards.len())
    };
    let _ = writeln!(out, "status: {status}\n");

    let _ = writeln!(out, "Graphs");
    let _ = writeln!(
        out,
        "  UPG: {} nodes, {} edges",
        r.upg.nodes.len(),
        r.upg.edges.len()
    );
    let _ = writeln!(
        out,
        "  UIG: {} nodes, {} edges",
        r.uig.nodes.len(),
        r.uig.edges.len()
    );
    let cdf = &r.subgraph_cdf;
    let _ = writeln!(
        out,
        "  connected subgraphs: {}; with more than 5 edges: {} of subgraphs, {} of nodes",
        cdf.components.len(),
        percent(cdf.large_component_fraction),
        percent(cdf.large_component_node_fraction)
    );
    if !cdf.points.is_empty() {
        let pts: Vec<String> = cdf
            .points
            .iter()
            .map(|p| format!("<={}: {:.3}", p.edges, p.fraction))
            .collect();
        wrapped(
            &mut out,
            &format!("edge-count CDF: {}", pts.join(", ")),
            "  ",
        );
    }
    out.push('\n');

    let pd = &r.pattern_distribution;
    let _ = writeln!(
        out,
        "Audit units: {} (plus {} via literal constructors)",
        pd.total, pd.via_literal
    );
    let _ = writeln!(
        out,
        "  {:<16} {:<10} {:>6} {:>6} {:>6} {:>8}",
        "pattern", "isolation", "units", "no", "yes", "unknown"
    );
    for row in &pd.rows {
        let c = r.check_distribution.row(row.pattern);
        let _ = writeln!(
            out,
            "  {:<16} {:<10} {:>6} {:>6} {:>6} {:>8}",
            row.label,
            row.pattern.isolation().to_string(),
            row.count,
            c.no,
            c.yes,
            c.unknown
        );
    }
    let _ = writeln!(out, "  {:<16} {:<10} {:>6}", "total", "", pd.total);
    if let Some(ratio) = r.nocheck_visibility.ratio {
        let _ = writeln!(
            out,
            "  no-check function units with a non-public caller: {}/{} ({})",
            r.nocheck_visibility.non_public,
            r.nocheck_visibility.nocheck_function_units,
            percent(ratio)
        );
    }
    out.push('\n');

    let _ = writeln!(out, "Safety annotations (lacking/total)");
    for k in [
        AnnotatedKind::Constructor,
        AnnotatedKind::Function,
        AnnotatedKind::Method,
    ] {
        let row = r.annotations.row(k);
        let _ = writeln!(out, "  {:<12} {}/{}", snake(&k), row.lacking, row.total);
    }
    out.push('\n');

    if !r.units.is_empty() {
        let _ = writeln!(out, "Units");
        for u in &r.units {
            wrapped(&mut out, &u.unit.unit_id, "  ");
            let mut check = snake(&u.check.kind);
            if let Some(reason) = &u.check.reason {
                check.push_str(&format!(" ({})", snake(reason)));
            }
            let lit = if u.unit.via_literal {
                ", via literal constructor"
            } else {
                ""
            };
            wrapped(
                &mut out,
                &format!(
                    "{} [{}{}]; check: {}; verdict: {}",
                    u.unit.pattern,
                    u.unit.isolation,
                    lit,
                    check,
                    verdict_text(&u.verdict)
                ),
                "    ",
            );
            wrapped(&mut out, &instantiated(&u.unit.formula), "    ");
            if let Some(note) = &u.check.note {
                wrapped(&mut out, &format!("note: {note}"), "    ");
            }
        }
        out.push('\n');
    }

    if !r.constructor_equivalence.is_empty() {
        let _ = writeln!(out, "Constructor equivalence");
        for eq in &r.constructor_equivalence {
            let _ = writeln!(out, "  {}", eq.struct_path);
            for p in &eq.pairs {
                wrapped(
                    &mut out,
                    &format!(
                        "{} vs {}: {}",
                        p.safe_ctor,
                        p.unsafe_ctor,
                        verdict_text(&p.verdict)
                    ),
                    "    ",
                );
            }
            for c in &eq.combined {
                wrapped(
                    &mut out,
                    &format!(
                        "{} -> {} via {} / {}: {}",
                        c.method,
                        c.callee,
                        c.safe_ctor,
                        c.unsafe_ctor,
                        verdict_text(&c.verdict)
                    ),
                    "    ",
                );
            }
        }
        out.push('\n');
    }

    if !r.unsafe_chains.is_empty() {
        let _ = writeln!(out, "Multi-hop unsafe chains");
        for c in &r.unsafe_chains {
            wrapped(&mut out, &c.join(" -> "), "  ");
        }
        out.push('\n');
    }

    let _ = writeln!(out, "Findings");
    if r.hazards.is_empty() {
        let _ = writeln!(out, "  none");
    }
    let mut last_code = "";
    for h in &r.hazards {
        if h.code != last_code {
            let _ = writeln!(out, "  {} {}", h.code, h.kind);
            last_code = &h.code;
        }
        let _ = writeln!(out, "    {} [{}]", h.subject, snake(&h.severity));
        wrapped(&mut out, &h.evidence, "      ");
        for u in &h.related_units {
            wrapped(&mut out, &format!("unit: {u}"), "      ");
        }
    }

    if !r.warnings.is_empty() {
        let _ = writeln!(out, "\nWarnings");
        for w in &r.warnings {
            wrapped(&mut out, w, "  ");
        }
    }
    if r.check_distribution.unknown_total > 0 {
        let _ = writeln!(
            out,
            "\n{} unit(s) with unknown check status are excluded from the no/yes columns.",
            r.check_distribution.unknown_total
        );
    }
    out
}
