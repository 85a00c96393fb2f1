//! End-to-end checks of the installed binary: command wiring, file output,
//! error reporting, and exit statuses.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn capcoh() -> Command {
    Command::new(env!("CARGO_BIN_EXE_capcoh"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_results_and_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("out.jsonl");
    let out = capcoh()
        .args(["run"])
        .arg(bundled("crm.yaml"))
        .arg("--results")
        .arg(&results)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("unauthorized ops"));
    let first = std::fs::read(&results).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 40, "4 strategies x 10 seeds");

    let out = capcoh()
        .args(["run"])
        .arg(bundled("crm.yaml"))
        .arg("--results")
        .arg(&results)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&results).unwrap(), first, "reruns must be byte-identical");
}

#[test]
fn strategy_and_seed_selection_narrow_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("out.jsonl");
    let out = capcoh()
        .args(["run"])
        .arg(bundled("crm.yaml"))
        .args(["--strategy", "rcc", "--seeds", "0..2"])
        .arg("--results")
        .arg(&results)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&results).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.contains("\"strategy\":\"rcc\"")));
}

#[test]
fn trace_dir_gets_one_file_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    let out = capcoh()
        .args(["run"])
        .arg(bundled("crm.yaml"))
        .args(["--strategy", "eager", "--seeds", "0..1"])
        .arg("--results")
        .arg(dir.path().join("r.jsonl"))
        .arg("--trace-dir")
        .arg(&traces)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(traces.join("crm_eager_0.trace.jsonl").exists());
    assert!(traces.join("crm_eager_1.trace.jsonl").exists());
}

#[test]
fn bounds_reports_exact_matches_for_the_deterministic_scenario() {
    let out = capcoh().args(["bounds"]).arg(bundled("crm.yaml")).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("Exact").count(), 4, "{text}");
}

#[test]
fn velocity_sweep_prints_a_constant_budget_bound() {
    let out = capcoh()
        .args(["bounds"])
        .arg(bundled("crm.yaml"))
        .arg("--velocity-sweep")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.matches("bound = 50").count(), 3, "{text}");
}

#[test]
fn plot_pipeline_produces_the_damage_chart_data() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("r.jsonl");
    let ok = capcoh()
        .args(["run"])
        .arg(bundled("crm.yaml"))
        .arg("--results")
        .arg(&results)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success());
    let csv_path = dir.path().join("plot.csv");
    let out = capcoh()
        .args(["plot"])
        .arg(&results)
        .arg("--out")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("strategy,unauthorized_mean,unauthorized_sigma,predicted_bound,lease_rcc_ratio"));
    assert!(csv.contains("lease,6000.0,0.0,6000,120.0"), "{csv}");
}

#[test]
fn verify_equivalence_prints_the_full_correspondence() {
    let out = capcoh().args(["verify-equivalence"]).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.matches("hw (").count(), 6, "six hardware transitions:\n{text}");
    assert!(text.contains("authorization-only events: Exhaust, Expire"));
    assert!(text.contains("verdict: equivalent"));
}

#[test]
fn config_errors_are_reported_with_a_failing_status() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.yaml");
    std::fs::write(&bad, "agents: 1\n").unwrap();
    let out = capcoh().args(["run"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing required key"), "{}", stderr(&out));

    let out = capcoh().args(["run"]).arg(dir.path().join("nope.yaml")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_strategy_selector_fails_cleanly() {
    let out = capcoh()
        .args(["run"])
        .arg(bundled("crm.yaml"))
        .args(["--strategy", "optimistic"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown strategy"), "{}", stderr(&out));
}
