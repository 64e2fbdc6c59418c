use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgGroup, Parser, ValueEnum};
use unsafe_audit::audit::AnnotationDb;
use unsafe_audit::extract::{extract_facts, ExtractError};
use unsafe_audit::facts::json::{load_facts_str, save_facts_json};
use unsafe_audit::facts::CrateFacts;
use unsafe_audit::pipeline::{analyze, AnalysisOptions, AuditReport};
use unsafe_audit::report::{emit_dot, render_report, DotStyle, ReportFormat};
use unsafe_audit::safety::HazardKind;
use unsafe_audit::selfcheck::{all_passed, selfcheck};

const EXIT_FINDINGS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EXTRACTION: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
    /// The extracted facts as JSON, reusable with --facts.
    Facts,
}

/// Build unsafety propagation and isolation graphs for a Rust crate and audit
/// how its unsafe code is encapsulated.
#[derive(Debug, Parser)]
#[command(name = "unsafe-audit", version)]
#[command(group(ArgGroup::new("source").args(["input", "facts"]).multiple(false)))]
struct Cli {
    /// Crate root directory (containing Cargo.toml or src/).
    input: Option<PathBuf>,

    /// Read previously extracted facts instead of source.
    #[arg(long, value_name = "PATH")]
    facts: Option<PathBuf>,

    /// Outputs to produce.
    #[arg(long, value_enum, num_args = 1.., default_values_t = [Format::Text])]
    format: Vec<Format>,

    #[arg(long, value_name = "DIR", default_value = "audit-out")]
    out_dir: PathBuf,

    /// Exit with status 1 when a finding with one of these codes is reported.
    #[arg(long, value_name = "CODES", value_delimiter = ',', num_args = 1..)]
    fail_on: Vec<String>,

    /// JSON with RS/VS tags for items the source does not annotate.
    #[arg(long, value_name = "PATH")]
    annotation_db: Option<PathBuf>,

    /// Drop audit units whose safe caller is not `pub`.
    #[arg(long)]
    no_private: bool,

    /// Run the bundled nine-pattern fixture and report each assertion.
    #[arg(long)]
    selfcheck: bool,
}

enum Failure {
    Usage(anyhow::Error),
    Extraction(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Extraction(_) => EXIT_EXTRACTION,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Extraction(e) => e,
        }
    }
}

fn extract_error_name(e: &ExtractError) -> &'static str {
    match e {
        ExtractError::RootNotFound(_) => "RootNotFound",
        ExtractError::NoSourceFiles(_) => "NoSourceFiles",
        ExtractError::Io { .. } => "Io",
    }
}

fn parse_fail_on(codes: &[String]) -> Result<Vec<HazardKind>, Failure> {
    let known = [
        HazardKind::MissingAnnotation,
        HazardKind::LiteralBypass,
        HazardKind::NoCheckNonPublic,
    ];
    codes
        .iter()
        .map(|c| {
            known
                .iter()
                .copied()
                .find(|k| k.code().eq_ignore_ascii_case(c.trim()))
                .ok_or_else(|| {
                    Failure::Usage(anyhow::anyhow!(
                        "unknown hazard code `{c}` (expected H001, H002 or H003)"
                    ))
                })
        })
        .collect()
}

fn load_input(cli: &Cli) -> Result<CrateFacts, Failure> {
    match (&cli.input, &cli.facts) {
        (Some(root), None) => {
            let ex = extract_facts(root).map_err(|e| {
                Failure::Extraction(anyhow::anyhow!("{}: {e}", extract_error_name(&e)))
            })?;
            for w in &ex.warnings {
                log::warn!("{w}");
            }
            Ok(ex.facts)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading facts {}", path.display()))
                .map_err(Failure::Extraction)?;
            load_facts_str(&text)
                .with_context(|| format!("loading facts {}", path.display()))
                .map_err(Failure::Extraction)
        }
        _ => Err(Failure::Usage(anyhow::anyhow!(
            "give either a crate directory or --facts PATH"
        ))),
    }
}

fn load_db(path: Option<&Path>) -> Result<AnnotationDb, Failure> {
    let Some(path) = path else {
        return Ok(AnnotationDb::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading annotation database {}", path.display()))
        .map_err(Failure::Usage)?;
    AnnotationDb::from_json(&text)
        .with_context(|| format!("loading annotation database {}", path.display()))
        .map_err(Failure::Usage)
}

fn write_outputs(
    out_dir: &Path,
    formats: &[Format],
    facts: &CrateFacts,
    report: &AuditReport,
) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let write = |name: &str, body: String| {
        let path = out_dir.join(name);
        log::info!("writing {}", path.display());
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    for f in formats {
        match f {
            Format::Text => {
                let text = render_report(report, ReportFormat::Text);
                print!("{text}");
                write("report.txt", text)?;
            }
            Format::Json => write("report.json", render_report(report, ReportFormat::Json))?,
            Format::Dot => {
                let style = DotStyle::default();
                write("upg.dot", emit_dot(&report.upg, "upg", &style))?;
                write("uig.dot", emit_dot(&report.uig, "uig", &style))?;
            }
            Format::Facts => write("facts.json", save_facts_json(facts))?,
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    if cli.selfcheck {
        let results = selfcheck();
        for r in &results {
            println!("{r}");
        }
        return Ok(if all_passed(&results) {
            0
        } else {
            EXIT_FINDINGS
        });
    }
    let fail_on = parse_fail_on(&cli.fail_on)?;
    let db = load_db(cli.annotation_db.as_deref())?;
    let facts = load_input(cli)?;
    let report = analyze(
        &facts,
        &db,
        AnalysisOptions {
            include_private: !cli.no_private,
        },
    );
    let mut formats = cli.format.clone();
    formats.sort();
    formats.dedup();
    write_outputs(&cli.out_dir, &formats, &facts, &report).map_err(Failure::Usage)?;
    let matched = report
        .hazards
        .iter()
        .filter(|h| fail_on.contains(&h.kind))
        .count();
    if matched > 0 {
        log::info!("{matched} finding(s) match --fail-on");
        return Ok(EXIT_FINDINGS);
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UNSAFE_AUDIT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
