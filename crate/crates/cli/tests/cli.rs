use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nn2flow");

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/fixture-a")
}

/// Copies fixture-A into a scratch project directory.
fn project() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in ["model.json", "train.csv", "infer.csv", "config.json"] {
        fs::copy(fixture_dir().join(f), dir.path().join(f)).unwrap();
    }
    dir
}

fn nn2flow(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).arg("--config").arg("config.json").args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn convert_prints_summary_and_writes_artifacts() {
    let p = project();
    let o = nn2flow(p.path(), &["convert", "--emit-certificates"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "leaves: 3, constant: 2, flows: 1");
    for f in ["fixture_a.plan.json", "fixture_a.iis.json", "fixture_a.tree.dot", "fixture_a.certificates.json"] {
        assert!(p.path().join("out").join(f).exists(), "{f} missing");
    }
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.path().join("out/fixture_a.plan.json")).unwrap()).unwrap();
    assert_eq!(plan["flows"].as_array().unwrap().len(), 1);
    assert_eq!(plan["prologue"], serde_json::json!([{"layer": 0, "index": 0}]));
}

#[test]
fn emit_plan_goes_to_stdout() {
    let p = project();
    let o = nn2flow(p.path(), &["convert", "--emit-plan"]);
    assert_eq!(o.status.code(), Some(0));
    let plan: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(plan["model_hash"].is_string());
    assert!(stderr(&o).contains("flows: 1"));
}

#[test]
fn empty_training_set_warns_but_succeeds() {
    let p = project();
    fs::write(p.path().join("train.csv"), "").unwrap();
    let o = nn2flow(p.path(), &["convert"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("flows: 0"));
    assert!(stderr(&o).contains("warning:"));
}

#[test]
fn unreadable_model_is_a_usage_error() {
    let p = project();
    let o = nn2flow(p.path(), &["--model", "missing.json", "convert"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let p = project();
    assert_eq!(nn2flow(p.path(), &["convert", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(nn2flow(p.path(), &["--bb-budget", "0", "convert"]).status.code(), Some(2));
}

#[test]
fn emit_converts_when_the_plan_is_missing() {
    let p = project();
    let o = nn2flow(p.path(), &["emit"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["fixture_a_ref.c", "fixture_a_hybrid.c", "fixture_a_harness.c", "fixture_a.plan.json"] {
        assert!(p.path().join("out").join(f).exists(), "{f} missing");
    }
}

#[test]
fn stale_plan_is_refused() {
    let p = project();
    assert_eq!(nn2flow(p.path(), &["convert"]).status.code(), Some(0));
    let model = fs::read_to_string(p.path().join("model.json")).unwrap();
    fs::write(p.path().join("model.json"), model.replace("\"fixture_a\"", "\"fixture_a2\"")).unwrap();
    let o = nn2flow(p.path(), &["emit", "--plan", "out/fixture_a.plan.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("re-run convert"), "{}", stderr(&o));
}

#[test]
fn bench_prints_table_and_dump() {
    let p = project();
    let o = nn2flow(p.path(), &["bench", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("exit by tree") && out.contains("12.5%"), "{out}");
    let dump: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.path().join("out/fixture_a.bench.json")).unwrap()).unwrap();
    assert_eq!(dump["hybrid"]["samples"].as_array().unwrap().len(), 64);
    let o = nn2flow(p.path(), &["bench", "--grid", "--cost-mac", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_check_passes_then_catches_a_flipped_condition() {
    let p = project();
    let o = nn2flow(p.path(), &["oracle-check"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS iis-irreducibility"));

    let path = p.path().join("out/fixture_a.plan.json");
    let plan = fs::read_to_string(&path).unwrap();
    assert!(plan.contains("\"inactive\""));
    fs::write(&path, plan.replace("\"inactive\"", "\"active\"")).unwrap();
    let o = nn2flow(p.path(), &["oracle-check"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL equivalence"));
    assert!(stdout(&o).contains("counterexample: ["));
}

#[test]
fn oracle_check_samples_oversized_domains() {
    let p = project();
    let o = nn2flow(p.path(), &["oracle-check", "--cap", "10", "--samples", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("domain too large, skipping exhaustive checks"));
}

#[test]
fn inspect_describes_model_and_plan() {
    let p = project();
    nn2flow(p.path(), &["convert"]);
    let o = nn2flow(p.path(), &["inspect"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("h0_0 = 2*x0 - 1"));
    assert!(out.contains("flow 0: 2*x0 - 1 <= 0 -> class 1"));
}
