use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dwb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwb")).args(args).output().expect("running dwb")
}

fn json(args: &[&str]) -> Value {
    let out = dwb(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn close(v: &Value, x: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - x).abs() <= tol
}

#[test]
fn bound_methods_agree_on_example1() {
    for method in ["level", "kelley", "dw"] {
        let r = json(&["bound", "example1", "--method", method]);
        assert!(close(&r["z_l"], 7.0, 1e-9), "{r}");
        assert!(close(&r["z_d"], 8.0, 1e-4), "{method}: {r}");
    }
}

#[test]
fn cuts_are_written_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cuts.json");
    let status = dwb(&["cuts", "example1", "--strengthen", "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let cuts = r["cuts"].as_array().unwrap();
    assert!(!cuts.is_empty());
    assert!(cuts.iter().all(|c| c["origin"] == "Strengthened" || c["origin"] == "Dwb"));
}

#[test]
fn formulate_exports_lp_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.lp");
    assert!(dwb(&["formulate", "example1", "--variant", "DWB", "--out", out.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("\\") && text.trim_end().ends_with("End"));
    assert!(text.contains(" C1: ") && text.contains("General"));
}

#[test]
fn solve_variants_reach_the_same_optimum() {
    for variant in ["MIP", "OBJ", "DWB", "STR", "D1T"] {
        let r = json(&["solve", "example1", "--variant", variant]);
        assert_eq!(r["status"], "Optimal", "{variant}");
        assert!(close(&r["objective"], 8.0, 1e-6), "{variant}: {r}");
    }
    assert!(!dwb(&["solve", "example1", "--variant", "D0T"]).status.success());
}

#[test]
fn hybrid_solves_example1_in_phase1() {
    let r = json(&["hybrid", "example1", "--force", "switch"]);
    assert_eq!(r["solved_in_phase1"], true);
    assert_eq!(r["decision"], Value::Null);
    assert!(close(&r["result"]["objective"], 8.0, 1e-6), "{r}");
}

fn generate(dir: &Path, seed: &str) -> String {
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"corpus": {"items": [
            {"family": "mkap", "k": 1, "m": 2, "n": 4, "correlation": "weak", "count": 1},
            {"family": "tkp", "n": 6, "block_size": 2, "count": 1}
        ]},
        "bench": {"variants": ["MIP", "STR"], "node_limit": 2000, "time_limit_secs": 10, "dual_max_iter": 200}}"#,
    )
    .unwrap();
    let out = dir.join("corpus");
    let r = dwb(&["generate", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    std::fs::read_to_string(out.join("manifest.csv")).unwrap()
}

#[test]
fn generate_is_seeded() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(generate(a.path(), "4"), generate(b.path(), "4"));
    let read = |d: &Path| std::fs::read_to_string(d.join("corpus/tkp_6_2_5.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn bench_writes_one_row_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(dir.path(), "1");
    assert_eq!(manifest.lines().count(), 3);
    let report = dir.path().join("report.csv");
    let cfg = dir.path().join("cfg.json");
    let r = dwb(&[
        "bench",
        dir.path().join("corpus/manifest.csv").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "STR_lp_bound"));
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let err = headers.iter().position(|h| h == "error").unwrap();
    assert!(rows.iter().all(|r| r[err].is_empty()));
}

#[test]
fn missing_instance_is_an_error() {
    let r = dwb(&["bound", "/nonexistent/instance.json"]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("reading instance"));
}
