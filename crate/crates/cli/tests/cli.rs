use std::path::PathBuf;
use std::process::{Command, Output};

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn wcprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcprox")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn membership_holds_with_both_oracles() {
    let out = wcprox(&["check-membership", problem("membership.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["summary"]["holds"], 2);
    assert_eq!(r["records"][1]["case_id"], "check-membership/conjugate");
}

#[test]
fn golden_decomposition_budgets() {
    let out = wcprox(&["sum-rule", problem("decompose.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let outputs = &json(&out)["records"][0]["outputs"];
    assert!((outputs["eps0"].as_f64().unwrap() - 0.005).abs() < 1e-9);
    assert!(outputs["eps1"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn type2_fails_beyond_the_sublevel_set() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("far.json");
    std::fs::write(&file, r#"{"function": {"name": "abs"}, "y": [2], "alpha": 1, "eps": 0.005, "x_eps": [1.2]}"#).unwrap();
    let out = wcprox(&["certify", "type2", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["records"][0]["verdict"], "FAILS");
}

#[test]
fn chain_and_csv_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("chain.csv");
    let out = wcprox(&["--format", "csv", "--out", out_path.to_str().unwrap(), "certify", "chain", problem("prox.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("case_id,verdict,margin,witness,reason"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.contains(",HOLDS,")), "{text}");
}

#[test]
fn grid_flag_replaces_the_standard_lattice() {
    let p = problem("conjugate.json");
    let out = wcprox(&["--grid", "-5,5,0.001", "conjugate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((r["records"][0]["outputs"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let bad = wcprox(&["--grid", "1,0,0.1", "conjugate", p.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn ippa_reaches_the_stationary_point() {
    let out = wcprox(&["ippa", problem("ippa.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let records = r["records"].as_array().unwrap();
    let last = records.last().unwrap();
    assert_eq!(last["case_id"], "ippa/final");
    assert!((last["outputs"]["x"][0].as_f64().unwrap() - 1.895_494_267).abs() < 1e-3);
}

#[test]
fn suites_and_empty_config() {
    let out = wcprox(&["suite", problem("suite.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["summary"]["holds"], 20);

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"suites": []}"#).unwrap();
    let out = wcprox(&["suite", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["records"].as_array().unwrap().len(), 0);
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\n  \"suites\": [\n    {\"name\": \"type1-chain\", \"casez\": 3}\n  ]\n}").unwrap();
    let out = wcprox(&["suite", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("casez"), "{err}");

    assert_eq!(wcprox(&["conjugate", "/nonexistent.json"]).status.code(), Some(3));
    assert_eq!(wcprox(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(wcprox(&["--help"]).status.code(), Some(0));
}
