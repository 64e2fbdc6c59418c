use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unsafe-audit"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn writes_requested_outputs() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let o = run(&[
        fixture("listing3").to_str().unwrap(),
        "--format",
        "json",
        "dot",
        "--out-dir",
        dir,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "upg.dot", "uig.dot"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    assert!(!out.path().join("report.txt").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["crate"], "listing3");
    assert_eq!(json["status"], "findings");
}

#[test]
fn text_report_goes_to_stdout() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        fixture("listing1").to_str().unwrap(),
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        stdout,
        std::fs::read_to_string(out.path().join("report.txt")).unwrap()
    );
    assert!(stdout.contains("sf-uf"));
}

#[test]
fn missing_root_is_extraction_failure() {
    let o = run(&["/nonexistent/crate/root"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("RootNotFound"));
}

#[test]
fn fail_on_missing_annotation() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let good = fixture("listing5.facts.json");
    let stripped = fixture("listing5_stripped.facts.json");
    let o = run(&[
        "--facts",
        good.to_str().unwrap(),
        "--fail-on",
        "H001",
        "--format",
        "json",
        "--out-dir",
        dir,
    ]);
    assert_eq!(code(&o), 0);
    let o = run(&[
        "--facts",
        stripped.to_str().unwrap(),
        "--fail-on",
        "h001",
        "--format",
        "json",
        "--out-dir",
        dir,
    ]);
    assert_eq!(code(&o), 1);
    let o = run(&[
        "--facts",
        stripped.to_str().unwrap(),
        "--fail-on",
        "H003",
        "--format",
        "json",
        "--out-dir",
        dir,
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn facts_and_source_agree() {
    let out = tempfile::tempdir().unwrap();
    let a = out.path().join("a");
    let b = out.path().join("b");
    let o = run(&[
        fixture("listing5").to_str().unwrap(),
        "--format",
        "json",
        "facts",
        "--out-dir",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let facts = a.join("facts.json");
    let o = run(&[
        "--facts",
        facts.to_str().unwrap(),
        "--format",
        "json",
        "--out-dir",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["--bogus"])), 2);
    assert_eq!(
        code(&run(&[
            fixture("listing1").to_str().unwrap(),
            "--format",
            "pdf"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            fixture("listing1").to_str().unwrap(),
            "--fail-on",
            "H999"
        ])),
        2
    );
    let l1 = fixture("listing1");
    let f = fixture("listing5.facts.json");
    assert_eq!(
        code(&run(&[
            l1.to_str().unwrap(),
            "--facts",
            f.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn malformed_annotation_db() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.json");
    std::fs::write(&db, "[1, 2]").unwrap();
    let o = run(&[
        fixture("listing1").to_str().unwrap(),
        "--annotation-db",
        db.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn selfcheck_is_stable() {
    let a = run(&["--selfcheck"]);
    let b = run(&["--selfcheck"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().all(|l| l.starts_with("ok")));
}
