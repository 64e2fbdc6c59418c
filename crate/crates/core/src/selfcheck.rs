//! Runs the bundled nine-pattern crate through the whole pipeline.

use std::fmt;

use serde::Serialize;

use crate::audit::{AnnotationDb, PatternKind};
use crate::extract::{extract_from_sources, SourceFile};
use crate::pipeline::{analyze, AnalysisOptions};
use crate::report::{render_report, ReportFormat};

pub const NINE_PATTERNS_SOURCE: &str = include_str!("../fixtures/nine_patterns/src/lib.rs");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{mark} {}: {}", self.name, self.detail)
    }
}

pub fn all_passed(results: &[Assertion]) -> bool {
    results.iter().all(|a| a.passed)
}

pub fn selfcheck() -> Vec<Assertion> {
    selfcheck_source(NINE_PATTERNS_SOURCE)
}

/// The nine-pattern expectations against arbitrary source for `src/lib.rs`.
pub fn selfcheck_source(source: &str) -> Vec<Assertion> {
    let run = || {
        let ex = extract_from_sources("nine_patterns", &[SourceFile::new("src/lib.rs", source)]);
        analyze(
            &ex.facts,
            &AnnotationDb::default(),
            AnalysisOptions::default(),
        )
    };
    let report = run();
    let mut out = Vec::new();
    let pd = &report.pattern_distribution;
    for p in PatternKind::ALL {
        let n = pd.count(p);
        out.push(Assertion {
            name: format!("pattern {}", p.label()),
            passed: n == 1,
            detail: format!("{n} unit(s), expected 1"),
        });
    }
    out.push(Assertion {
        name: "total".into(),
        passed: pd.total == 9,
        detail: format!("{} unit(s), expected 9", pd.total),
    });
    let bad: Vec<&str> = report
        .units
        .iter()
        .filter(|u| u.unit.formula.rendering != u.unit.pattern.rendering())
        .map(|u| u.unit.unit_id.as_str())
        .collect();
    out.push(Assertion {
        name: "formula renderings".into(),
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            "all match their pattern".into()
        } else {
            format!("mismatched: {}", bad.join(", "))
        },
    });
    let again = run();
    let same =
        render_report(&report, ReportFormat::Json) == render_report(&again, ReportFormat::Json);
    out.push(Assertion {
        name: "determinism".into(),
        passed: same,
        detail: if same {
            "repeated run is byte-identical".into()
        } else {
            "repeated run differs".into()
        },
    });
    out
}
