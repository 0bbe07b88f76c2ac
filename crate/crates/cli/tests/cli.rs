use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const SAMPLE: &str = "x1^13 + x1*x2^12 + x2^13 + 1; x1^12*x2 - x2^13 - x1*x2 + 1";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-equidist"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("torus-equidist-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn solve_cubic() {
    let v = json_of(&run(&["solve", "--inline", "x^3 - 1", "--no-timestamp"]));
    assert_eq!(v["manifest"]["schema"], "1");
    assert_eq!(v["manifest"]["command"], "solve");
    assert!(v["manifest"]["timestamp"].is_null());
    assert_eq!(v["result"]["degree"], 3);
    assert_eq!(v["result"]["certified"], true);
    assert_eq!(v["result"]["cycle"]["points"].as_array().unwrap().len(), 3);
}

#[test]
fn solve_sample_system_file() {
    let p =
        scratch("sample.json", &format!("{{\"n\": 2, \"polynomials\": {:?}}}", SAMPLE.split("; ").collect::<Vec<_>>()));
    let v = json_of(&run(&["solve", "--system", p.to_str().unwrap()]));
    assert_eq!(v["result"]["degree"], 169);
    assert_eq!(v["result"]["mixed_volume"], 169);
    assert!(v["manifest"]["timestamp"].is_string());
}

#[test]
fn exit_codes() {
    let out = run(&["solve", "--inline", "x1^2 + *"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position"));

    let out = run(&["solve", "--inline", "x1 + x2 + 1; 2*x1 + 2*x2 + 1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("directional resultant in direction"), "{err}");

    let out = run(&["solve", "--inline", "x1 + x2 + x3 - 1; x1 - x2; x2 - x3 + 2"]);
    assert_eq!(out.status.code(), Some(65));

    let out = run(&["solve", "--system", "/nonexistent/system.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_solve_has_manifest_line() {
    let out = run(&["solve", "--inline", "x^4 - 2", "--format", "csv", "--no-timestamp"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next().unwrap(), "re1,im1,mod1,arg1,m");
    assert_eq!(lines.count(), 4);
}

#[test]
fn report_sample_verdicts_pass() {
    let v = json_of(&run(&["report", "--inline", SAMPLE, "--eps", "0.1,0.2", "--no-timestamp"]));
    let bounds = v["result"]["bounds"].as_array().unwrap();
    assert!(bounds.len() >= 4);
    for b in bounds {
        assert_eq!(b["verdict"], "pass", "{b}");
    }
    assert_eq!(v["result"]["discrepancy"]["degree"], 169);
}

#[test]
fn hist_conserves_mass() {
    let out = run(&["hist", "--inline", SAMPLE, "--bins", "24", "--format", "csv", "--no-timestamp"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut sums = std::collections::BTreeMap::new();
    let mut rows = 0;
    for line in text.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        *sums.entry((f[0].to_string(), f[1].to_string())).or_insert(0u64) += f[5].parse::<u64>().unwrap();
        rows += 1;
    }
    assert_eq!(rows, 2 * 2 * 24);
    assert!(sums.values().all(|&s| s == 169), "{sums:?}");
}

#[test]
fn identical_bytes_without_timestamp() {
    let args = ["report", "--inline", "2*x^7 - 3*x^2 + 1", "--no-timestamp"];
    let a = run(&args);
    let b = bin().args(args).env("TORUS_EQUIDIST_THREADS", "1").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_thread_count() {
    let out = bin().args(["window-check"]).env("TORUS_EQUIDIST_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn window_check_passes() {
    let v = json_of(&run(&["window-check", "--no-timestamp"]));
    let rows = v["result"].as_array().unwrap();
    assert!(rows.len() > 100);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn eta_of_cyclotomic() {
    let v = json_of(&run(&["eta", "--inline", "x^8 - 1"]));
    let e = &v["result"]["eta_interval"];
    let expect = 2f64.ln() / 8.0;
    assert!(e["lower"].as_f64().unwrap() <= expect + 1e-12);
    assert!(e["upper"].as_f64().unwrap() >= expect - 1e-12);
}

#[test]
fn trend_csv_and_seed_override() {
    let cfg = scratch(
        "trend.json",
        r#"{"polytopes": [[[0,0],[1,0],[0,1]], [[0,0],[1,0],[0,1]]], "kappas": [1, 2, 3], "trials": 3, "seed": 7, "law": "gaussian", "eps": [0.1]}"#,
    );
    let c = cfg.to_str().unwrap();
    let out = run(&["trend", "--config", c, "--format", "csv", "--no-timestamp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "kappa,trials,mean_dang,max_dang,rate,mean_drad_0.1,bound,rejected");
    assert_eq!(lines.len(), 5);
    let again = run(&["trend", "--config", c, "--format", "csv", "--no-timestamp"]);
    assert_eq!(again.stdout, text.as_bytes());
    let other = json_of(&run(&["trend", "--config", c, "--seed", "8", "--no-timestamp"]));
    assert_eq!(other["manifest"]["seed"], 8);
}

#[test]
fn tube_report() {
    let cfg = scratch(
        "tube.json",
        r#"{"polynomials": ["x1*x2 - x3^2", "x1 + 2*x2"], "n": 3, "delta": 0.1, "samples": 20000, "seed": 3}"#,
    );
    let v = json_of(&run(&["tube", "--config", cfg.to_str().unwrap(), "--no-timestamp"]));
    let reports = v["result"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_ne!(r["verdict"], "fail", "{r}");
    }
}
