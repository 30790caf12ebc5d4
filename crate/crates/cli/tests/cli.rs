use std::process::{Command, Output};

use serde_json::Value;

fn matchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matchlab"))
        .args(args)
        .env_remove("MATCHLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn json(args: &[&str]) -> Value {
    let out = matchlab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_str(&stdout(&out)).expect("valid JSON")
}

#[test]
fn a_table_csv_ends_with_seventh_row() {
    let out = matchlab(&["tables", "a", "--n-max", "7", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("n,a"));
    assert_eq!(text.lines().last(), Some("7,23633"));
}

#[test]
fn d_table_is_ragged() {
    let out = matchlab(&["tables", "d", "--n-max", "6", "--format", "csv"]);
    let text = stdout(&out);
    assert_eq!(text.lines().nth(3), Some("3,3,4,6"));
    assert_eq!(text.lines().last(), Some("6,309,362,426,504,600,720"));
}

#[test]
fn sequences_table() {
    let v = json(&["tables", "sequences", "--n-max", "8"]);
    let last = &v["result"]["rows"][7];
    assert_eq!(last["factorial"], "40320");
    assert_eq!(last["d"], "14833");
}

#[test]
fn rho_of_four() {
    let v = json(&["rho", "--n", "4"]);
    assert_eq!(v["result"]["rho"], "67/24");
    assert_eq!(v["result"]["nu_within_inverse_factorial"], true);
    assert_eq!(v["schema"], "matchlab/1");
}

#[test]
fn balance_closed_form_six() {
    let v = json(&["balance", "closed-form", "--n", "6"]);
    assert_eq!(v["result"]["k"], 4);
    assert_eq!(v["result"]["size"], "41/10");
    assert_eq!(v["result"]["mode"], "exact");
}

#[test]
fn balance_run_on_fixture_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, r#"{"n": 2, "adjacency": [[1, 2], [2]]}"#).unwrap();
    let v = json(&[
        "balance",
        "run",
        "--graph",
        path.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(v["result"]["size"], "3/2");
    assert_eq!(v["result"]["steps"][0]["threshold"], "1/2");
    assert_eq!(
        v["result"]["validation"]["violations"],
        serde_json::json!([])
    );
    let float = json(&["balance", "run", "--n", "2", "--float"]);
    assert_eq!(float["result"]["mode"], "float");
    assert_eq!(float["result"]["size_f64"], 1.5);
}

#[test]
fn averaging_normalizes_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, r#"{"n": 3, "adjacency": [[3], [1, 3], [2, 1]]}"#).unwrap();
    let p = path.to_str().unwrap();
    let raw = matchlab(&["balance", "averaging", "--graph", p]);
    assert!(!raw.status.success());
    assert!(String::from_utf8_lossy(&raw.stderr).contains("diagonal"));
    let v = json(&["balance", "averaging", "--graph", p, "--normalize"]);
    assert_eq!(v["result"]["balance_at_least_averaging"], true);
}

#[test]
fn json_is_byte_deterministic() {
    let args = [
        "ranking", "mc", "--n", "12", "--trials", "3000", "--seed", "7",
    ];
    let a = matchlab(&args);
    let b = matchlab(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "2"]);
    assert_eq!(matchlab(&threaded).stdout, a.stdout);
}

#[test]
fn config_records_defaults() {
    let v = json(&["pricing", "slackness", "--n", "3", "--trials", "500"]);
    let cfg = &v["config"]["command"]["pricing"]["slackness"];
    assert_eq!(cfg["mc"]["seed"], 0);
    assert_eq!(cfg["mc"]["trials"], 500);
    assert_eq!(v["config"]["format"], "json");
    assert_eq!(v["result"]["violations"], 0);
    let d = json(&["ranking", "mc", "--n", "3"]);
    assert_eq!(
        d["config"]["command"]["ranking"]["mc"]["mc"]["trials"],
        100_000
    );
}

#[test]
fn enumeration_cap_is_actionable() {
    let out = matchlab(&["ranking", "exact", "--n", "11"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Monte Carlo"));
    let v = json(&["ranking", "exact", "--n", "5"]);
    assert_eq!(v["result"]["sum_of_sizes"], "411");
    assert_eq!(v["result"]["agrees"], true);
}

#[test]
fn adversary_transcript() {
    let v = json(&["adversary", "--n", "6", "--alg", "highest"]);
    assert_eq!(v["result"]["matching_size"], 3);
    assert_eq!(v["result"]["max_matching_size"], 6);
    let odd = matchlab(&["adversary", "--n", "5"]);
    assert!(!odd.status.success());
    let fixed = json(&[
        "adversary",
        "--n",
        "10",
        "--alg",
        "ranking-fixed-pi",
        "--seed",
        "3",
    ]);
    assert_eq!(fixed["result"]["matching_size"], 5);
}

#[test]
fn pricing_reports() {
    let v = json(&["pricing", "mc", "--n", "6", "--trials", "2000"]);
    assert_eq!(
        v["result"]["per_edge"]["means"].as_array().unwrap().len(),
        6
    );
    assert_eq!(v["result"]["per_edge"]["identity_violations"], 0);
    let r = json(&[
        "pricing", "removal", "--n", "4", "--j", "4", "--trials", "100",
    ]);
    assert_eq!(r["result"]["difference"]["mean"], 0.0);
    assert!(!matchlab(&["pricing", "removal", "--n", "4", "--j", "0"])
        .status
        .success());
}

#[test]
fn graph_export_round_trips() {
    let out = matchlab(&["graph", "dn", "--n", "5", "--seed", "9"]);
    let text = stdout(&out);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dn.json");
    std::fs::write(&path, &text).unwrap();
    let v = json(&[
        "ranking",
        "mc",
        "--graph",
        path.to_str().unwrap(),
        "--trials",
        "100",
    ]);
    assert_eq!(v["result"]["estimate"]["n"], 5);
}

#[test]
fn verify_quick_mode_passes() {
    let start = std::time::Instant::now();
    let out = matchlab(&["verify", "--n-max", "3"]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(elapsed < 1.0, "{elapsed}s");
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["result"]["passed"], true);
}

#[test]
fn verify_names_published_entry() {
    let v = json(&["verify", "--n-max", "6", "--trials", "2000"]);
    let checks = v["result"]["checks"].as_array().unwrap();
    assert!(checks
        .iter()
        .any(|c| c["name"] == "a(6) = 2921" && c["passed"] == true));
}

#[test]
fn corrupted_triangle_fixture_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(&path, r#"{"rows": [["1"], ["1", "2"], ["3", "5", "6"]]}"#).unwrap();
    let out = matchlab(&[
        "verify",
        "--n-max",
        "3",
        "--triangle",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let failed: Vec<&str> = v["result"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"triangle-vs-bruteforce"), "{failed:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL triangle-vs-bruteforce"));
}

#[test]
fn verify_csv_has_fixed_header() {
    let out = matchlab(&[
        "verify", "--n-max", "2", "--trials", "500", "--format", "csv",
    ]);
    assert_eq!(
        stdout(&out).lines().next(),
        Some("name,anchor,passed,measured,expected,tolerance")
    );
}

#[test]
fn bad_graph_fixture_reports_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 2, "adjacency": [[3], [1]]}"#).unwrap();
    let out = matchlab(&["balance", "run", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside"));
}
