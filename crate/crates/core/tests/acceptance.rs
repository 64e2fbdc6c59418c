//! Acceptance gate: one PASS/FAIL line per criterion.

mod common;

use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_force_units, extract, random_graph, report, union_find_cdf, SOURCE_FIXTURES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unsafe_audit::audit::{
    check_constructor_equivalence, constructor_pair_verdict, evaluate_formula, extract_audit_units,
    AnnotationDb, AuditFormula, Direction, FormulaTerm, IsolationType, PatternKind, PropertyTable,
    SetKind, Verdict,
};
use unsafe_audit::extract::extract_facts;
use unsafe_audit::pipeline::{analyze, AnalysisOptions, AuditReport, UnitReport};
use unsafe_audit::report::stats::subgraph_size_cdf;
use unsafe_audit::report::{emit_dot, render_report, DotStyle, ReportFormat};
use unsafe_audit::safety::{AnnotatedKind, CheckKind, CheckReason, HazardKind};
use unsafe_audit::selfcheck::{all_passed, selfcheck};
use unsafe_audit::uig::derive_uig;
use unsafe_audit::upg::{build_upg, EdgeKind, NodeCategory};

const NINE_PATTERN_LIMIT: Duration = Duration::from_secs(5);
const SCALE_LIMIT: Duration = Duration::from_secs(60);
const RANDOM_GRAPHS: u64 = 200;
const RANDOM_MAX_NODES: usize = 30;
const ORACLE_MAX_NODES: usize = 20;
const CDF_TOLERANCE: f64 = 1e-12;
const SCALE_FUNCTIONS: usize = 1000;
const SCALE_UNSAFE: usize = 300;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn nine_patterns() -> Outcome {
    let start = Instant::now();
    let r = report("nine_patterns");
    let checks = selfcheck();
    let elapsed = start.elapsed();
    let d = &r.pattern_distribution;
    for p in PatternKind::ALL {
        ensure(
            d.count(p) == 1,
            format!("{} has {} units", p.label(), d.count(p)),
        )?;
    }
    ensure(d.total == 9, format!("total {}", d.total))?;
    for u in r.units.iter().filter(|u| !u.unit.via_literal) {
        ensure(
            u.formula_rendering == u.unit.pattern.rendering(),
            format!("{}: {}", u.unit.unit_id, u.formula_rendering),
        )?;
    }
    let want = "RS(um) ⊆ VS(sm) ∪ RS(c1u) ∪ VS(c1u)";
    let got = r
        .units
        .iter()
        .find(|u| u.unit.pattern == PatternKind::SmCuUmCs)
        .map(|u| u.formula_rendering.as_str());
    ensure(got == Some(want), format!("sm(uc)-um(sc) renders {got:?}"))?;
    ensure(all_passed(&checks), "selfcheck failed")?;
    ensure(elapsed < NINE_PATTERN_LIMIT, format!("took {elapsed:?}"))?;
    Ok(format!("9 patterns x1, total 9, {elapsed:.2?}"))
}

fn primary(r: &AuditReport) -> impl Iterator<Item = &UnitReport> {
    r.units.iter().filter(|u| !u.unit.via_literal)
}

fn only<'a>(r: &'a AuditReport, caller: &str) -> Vec<&'a UnitReport> {
    primary(r).filter(|u| u.unit.caller == caller).collect()
}

fn listings() -> Outcome {
    let has = |u: &UnitReport, p: PatternKind, i: IsolationType| {
        u.unit.pattern == p && u.unit.isolation == i
    };

    let r1 = report("listing1");
    let u = only(&r1, "listing1::foo");
    ensure(
        u.len() == 1 && has(u[0], PatternKind::SfUf, IsolationType::Direct),
        "listing 1",
    )?;

    let r3 = report("listing3");
    let u = only(&r3, "listing3::IoPort::read");
    ensure(
        u.len() == 1 && has(u[0], PatternKind::SmCuUf, IsolationType::Half),
        "listing 3",
    )?;

    let r4 = report("listing4");
    let u = only(&r4, "listing4::XApic::read");
    ensure(
        u.len() == 1
            && has(u[0], PatternKind::SmCsUf, IsolationType::Indirect)
            && u[0].check.kind == CheckKind::DirectCheck
            && u[0].check.reason == Some(CheckReason::AssertOrIfValidated),
        "listing 4",
    )?;

    let r5 = report("listing5");
    let u = only(&r5, "listing5::PhysAddr::new");
    ensure(
        u.len() == 1
            && u[0].unit.callee == "listing5::PhysAddr::new_unchecked"
            && has(u[0], PatternKind::SfUf, IsolationType::Direct),
        "listing 5 new",
    )?;
    let mut hhdm: Vec<PatternKind> = only(&r5, "listing5::PhysAddr::as_hhdm_virt")
        .iter()
        .map(|u| u.unit.pattern)
        .collect();
    hhdm.sort();
    ensure(
        hhdm == vec![PatternKind::SmCsUf, PatternKind::SmCuUf],
        format!("listing 5 as_hhdm_virt {hhdm:?}"),
    )?;

    let r6 = report("listing6");
    let u = only(&r6, "listing6::LocalKey::try_with");
    ensure(
        !u.is_empty()
            && u.iter().all(|u| {
                u.unit.pattern == PatternKind::SmCuUf
                    && matches!(u.verdict, Verdict::Unverifiable { .. })
            }),
        "listing 6",
    )?;

    let r7 = report("listing7");
    let u = only(&r7, "listing7::panic_callback");
    ensure(
        u.len() == 1
            && u[0].check.kind == CheckKind::NoCheck
            && u[0].check.reason == Some(CheckReason::FromCallerParams),
        "listing 7 check",
    )?;
    ensure(
        r7.hazards.iter().any(|h| {
            h.kind == HazardKind::NoCheckNonPublic && h.subject == "listing7::panic_callback"
        }),
        "listing 7 H003",
    )?;
    Ok("listings 1, 3, 4, 5, 6, 7 classify as expected".into())
}

fn isolation_invariant() -> Outcome {
    for seed in 0..RANDOM_GRAPHS {
        let g = random_graph(&mut ChaCha8Rng::seed_from_u64(seed), RANDOM_MAX_NODES);
        let uig = derive_uig(&g);
        for n in uig
            .nodes
            .iter()
            .filter(|n| matches!(n.category, NodeCategory::Uf | NodeCategory::Um))
        {
            ensure(
                uig.incoming(&n.id, EdgeKind::Call).next().is_some(),
                format!("seed {seed}: {} kept", n.id),
            )?;
        }
        ensure(
            derive_uig(&uig) == uig,
            format!("seed {seed}: pruning not idempotent"),
        )?;
    }
    Ok(format!(
        "{RANDOM_GRAPHS} graphs of <= {RANDOM_MAX_NODES} nodes"
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut graphs: Vec<(String, unsafe_audit::upg::UpgGraph)> = Vec::new();
    for name in SOURCE_FIXTURES {
        let g = build_upg(&extract(name).facts);
        if g.nodes.len() <= ORACLE_MAX_NODES {
            graphs.push((name.to_string(), g));
        }
    }
    let fixtures = graphs.len();
    for seed in 0..RANDOM_GRAPHS {
        graphs.push((
            format!("random {seed}"),
            random_graph(&mut ChaCha8Rng::seed_from_u64(seed), ORACLE_MAX_NODES),
        ));
    }
    for (name, g) in &graphs {
        let uig = derive_uig(g);
        let got: std::collections::BTreeSet<common::UnitKey> = extract_audit_units(&uig)
            .into_iter()
            .map(|u| {
                (
                    u.caller,
                    u.callee,
                    u.caller_ctor,
                    u.callee_ctor,
                    u.pattern.label().to_string(),
                )
            })
            .collect();
        ensure(
            got == brute_force_units(&uig),
            format!("{name}: units differ"),
        )?;
        let cdf: Vec<(usize, f64)> = subgraph_size_cdf(g)
            .points
            .iter()
            .map(|p| (p.edges, p.fraction))
            .collect();
        let want = union_find_cdf(g);
        ensure(
            cdf.len() == want.len()
                && cdf
                    .iter()
                    .zip(&want)
                    .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= CDF_TOLERANCE),
            format!("{name}: cdf differs"),
        )?;
    }
    Ok(format!(
        "{fixtures} fixtures + {RANDOM_GRAPHS} random graphs"
    ))
}

fn formula_properties() -> Outcome {
    let rs = |n: &str| FormulaTerm {
        set: SetKind::Rs,
        node: n.into(),
    };
    let vs = |n: &str| FormulaTerm {
        set: SetKind::Vs,
        node: n.into(),
    };
    let f = AuditFormula {
        required: vec![rs("u")],
        available: vec![vs("s"), rs("c"), vs("c")],
        rendering: String::new(),
    };
    let universe = ["a", "b", "c"];
    let subsets: Vec<Vec<&str>> = (0..8u8)
        .map(|m| {
            universe
                .iter()
                .enumerate()
                .filter(|(i, _)| m & (1 << i) != 0)
                .map(|(_, t)| *t)
                .collect()
        })
        .collect();
    for v1 in &subsets {
        let mut p = PropertyTable::default();
        p.set_rs("u", []);
        p.set_vs("s", v1.iter().copied());
        ensure(
            evaluate_formula(&f, &p) == Verdict::Satisfied,
            "empty RS not satisfied",
        )?;
    }
    for req in &subsets {
        for small in &subsets {
            for big in subsets
                .iter()
                .filter(|b| small.iter().all(|t| b.contains(t)))
            {
                let verdict = |v: &[&str]| {
                    let mut p = PropertyTable::default();
                    p.set_rs("u", req.iter().copied());
                    p.set_vs("s", v.iter().copied());
                    evaluate_formula(&f, &p)
                };
                if verdict(small) == Verdict::Satisfied {
                    ensure(verdict(big) == Verdict::Satisfied, "not monotone in VS")?;
                }
            }
        }
    }

    let facts = extract("listing5").facts;
    let upg = build_upg(&facts);
    let uig = derive_uig(&upg);
    let s = facts
        .struct_fact("listing5::PhysAddr")
        .ok_or("no PhysAddr")?;
    let db = |rs: &str| {
        AnnotationDb::from_json(&format!(
            r#"{{"required": {{"listing5::PhysAddr::new_unchecked": {rs}}},
                "verified": {{"listing5::PhysAddr::new": ["init_state"]}}}}"#
        ))
        .unwrap()
    };
    let props = PropertyTable::build(&facts, &upg, &db(r#"["init_state"]"#));
    let eq = check_constructor_equivalence(s, &facts, &props, &uig).map_err(|e| e.to_string())?;
    ensure(
        eq.pairs.iter().all(|p| p.verdict == Verdict::Satisfied) && !eq.pairs.is_empty(),
        "PhysAddr not satisfied",
    )?;
    let props = PropertyTable::build(&facts, &upg, &db("[]"));
    let v = constructor_pair_verdict(
        &props,
        "listing5::PhysAddr::new",
        "listing5::PhysAddr::new_unchecked",
    );
    ensure(
        matches!(&v, Verdict::Violated { missing, direction: Some(Direction::UnsafeSideMissing) } if missing == &["init_state".to_string()]),
        format!("PhysAddr without RS tag: {v:?}"),
    )?;
    Ok("empty RS, VS monotonicity, PhysAddr satisfied/violated".into())
}

fn annotation_table() -> Outcome {
    let r = report("annotations12");
    let t = &r.annotations;
    let got: Vec<(usize, usize)> = [
        AnnotatedKind::Constructor,
        AnnotatedKind::Function,
        AnnotatedKind::Method,
    ]
    .into_iter()
    .map(|k| (t.row(k).lacking, t.row(k).total))
    .collect();
    ensure(got == vec![(2, 4), (2, 4), (1, 4)], format!("{got:?}"))?;
    ensure(t.total() == 12, "total")?;
    let h001 = r
        .hazards
        .iter()
        .filter(|h| h.kind == HazardKind::MissingAnnotation)
        .count();
    ensure(h001 == 5, format!("{h001} H001 hazards"))?;
    Ok("constructor 2/4, function 2/4, method 1/4".into())
}

fn outputs(name: &str) -> (String, String, String, String) {
    let r = report(name);
    let s = DotStyle::default();
    (
        render_report(&r, ReportFormat::Json),
        emit_dot(&r.upg, "upg", &s),
        emit_dot(&r.uig, "uig", &s),
        render_report(&r, ReportFormat::Text),
    )
}

fn determinism() -> Outcome {
    for name in SOURCE_FIXTURES {
        ensure(outputs(name) == outputs(name), format!("{name} differs"))?;
    }
    Ok(format!(
        "{} fixtures byte-identical across runs",
        SOURCE_FIXTURES.len()
    ))
}

fn synthetic_crate() -> String {
    let mut src = String::from("#![allow(dead_code)]\n");
    let structs = 50;
    let per_struct_unsafe = 2;
    let free_unsafe = SCALE_UNSAFE - structs * per_struct_unsafe;
    for i in 0..free_unsafe {
        writeln!(src, "/// # Safety\n///\n/// `p` must be valid.\npub unsafe fn raw{i}(p: *const u64) -> u64 {{ *p }}").unwrap();
    }
    for s in 0..structs {
        writeln!(
            src,
            "pub struct S{s} {{ p: *const u64 }}\nimpl S{s} {{\n    pub fn new(p: &u64) -> Self {{ S{s} {{ p }} }}\n    \
             /// # Safety\n    ///\n    /// Must be aligned.\n    pub unsafe fn from_raw(p: *const u64) -> Self {{ S{s} {{ p }} }}\n    \
             pub unsafe fn peek(&self) -> u64 {{ *self.p }}\n    pub fn get(&self) -> u64 {{ unsafe {{ self.peek() }} }}\n}}"
        )
        .unwrap();
    }
    let written = SCALE_UNSAFE + structs * 2;
    for i in 0..SCALE_FUNCTIONS - written {
        let a = i % free_unsafe;
        let b = (i * 7 + 3) % free_unsafe;
        if i % 3 == 0 {
            writeln!(
                src,
                "pub fn safe{i}(x: &u64) -> u64 {{ unsafe {{ raw{a}(x) + raw{b}(x) }} }}"
            )
            .unwrap();
        } else if i % 3 == 1 {
            writeln!(
                src,
                "fn safe{i}(x: u64) -> u64 {{ if x > 0 {{ safe{}(&x) }} else {{ 0 }} }}",
                i - 1
            )
            .unwrap();
        } else {
            writeln!(
                src,
                "pub fn safe{i}(x: &u64) -> u64 {{ S{}::new(x).get() }}",
                i % structs
            )
            .unwrap();
        }
    }
    src
}

fn scale() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(
        dir.path().join("Cargo.toml"),
        "[package]\nname = \"synthetic\"\nversion = \"0.1.0\"\n",
    )
    .map_err(|e| e.to_string())?;
    std::fs::create_dir(dir.path().join("src")).map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("src/lib.rs"), synthetic_crate()).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let facts = extract_facts(dir.path()).map_err(|e| e.to_string())?.facts;
    let r = analyze(&facts, &AnnotationDb::default(), AnalysisOptions::default());
    let _ = render_report(&r, ReportFormat::Json);
    let _ = render_report(&r, ReportFormat::Text);
    let _ = emit_dot(&r.upg, "upg", &DotStyle::default());
    let elapsed = start.elapsed();
    let unsafe_items = facts.functions.iter().filter(|f| f.declared_unsafe).count();
    ensure(
        facts.functions.len() == SCALE_FUNCTIONS,
        format!("{} functions", facts.functions.len()),
    )?;
    ensure(
        unsafe_items == SCALE_UNSAFE,
        format!("{unsafe_items} unsafe items"),
    )?;
    ensure(!r.units.is_empty(), "no units")?;
    ensure(elapsed < SCALE_LIMIT, format!("took {elapsed:?}"))?;
    Ok(format!(
        "{SCALE_FUNCTIONS} fns / {SCALE_UNSAFE} unsafe, {} units, {elapsed:.2?}",
        r.units.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("nine-pattern fixture", nine_patterns),
        ("listing fixtures", listings),
        ("isolation invariant", isolation_invariant),
        ("oracle equivalence", oracle_equivalence),
        ("formula evaluator", formula_properties),
        ("annotation table", annotation_table),
        ("determinism", determinism),
        ("scale smoke test", scale),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
