use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn splitword(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitword"))
        .args(args)
        .env_remove("SPLITWORD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn classify_tower() {
    let v = json(&splitword(&["classify", "--spec", "tower2:depth=4,N=2"]));
    assert_eq!(v["result"]["verdict"], "NotDelta");
    assert_eq!(v["spec"], "tower2:depth=4,N=2");
}

#[test]
fn couple_example() {
    let v = json(&splitword(&["couple", "--word", "2121", "--M", "2"]));
    assert_eq!(v["result"]["perm"], serde_json::json!([2, 1, 4, 3]));
    assert_eq!(v["result"]["mismatched_positions"], serde_json::json!([]));
    let v = json(&splitword(&["couple", "--word", "11121122", "--partial", "--ell", "2", "--lambda", "1"]));
    assert_eq!(v["result"]["letters"], serde_json::json!([1, 1, 1, 2]));
}

#[test]
fn metric_with_oracle() {
    let v = json(&splitword(&["metric", "e", "--spec", "ratios:[2,2],N=2", "--n", "-2", "--x", "1122", "--y", "2211", "--oracle"]));
    assert_eq!(v["result"]["agree"], true);
    assert_eq!(v["result"]["e"]["num"], 0);
    let v = json(&splitword(&["metric", "autcount", "--spec", "ratios:[3,2],N=2", "--n", "-2"]));
    assert_eq!(v["result"]["count"], "48");
}

#[test]
fn simulate_dump_lines() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("path.jsonl");
    let v = json(&splitword(&["simulate", "--spec", "const:r=2,depth=4,N=2", "--seed", "5", "--dump", dump.to_str().unwrap()]));
    assert_eq!(v["result"]["splitting_holds"], true);
    let text = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0]["time"], -4);
    assert_eq!(lines[0]["word"].as_str().unwrap().len(), 16);
    assert!(lines[0]["innovation"].is_null());
    assert_eq!(lines[4]["seed"], 5);
}

#[test]
fn reconstruct_with_plan_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(&plan, r#"{"times": [-1, 0], "alphas": ["1/2", "1"], "fill": 1}"#).unwrap();
    let out = dir.path().join("c.csv");
    let status = splitword(&[
        "reconstruct", "theoremC", "--spec", "ratios:[256,4],N=2", "--plan", plan.to_str().unwrap(),
        "--target", "0", "--samples", "500", "--seed", "3", "--format", "csv", "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[6], "time");
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert!(rows.iter().any(|r| &r[7] == "prefixes.mismatch_frequency" && &r[6] == "-1"));
    assert!(rows.iter().all(|r| &r[4] == "3" && &r[5] == "500"));
}

#[test]
fn theorem_b_step_and_chain() {
    let v = json(&splitword(&["reconstruct", "theoremB", "--spec", "ratios:[1024],N=2", "--step", "0", "--samples", "2000"]));
    assert!(v["result"]["frequency"].as_f64().unwrap() < v["result"]["bound"].as_f64().unwrap());
    let v = json(&splitword(&["reconstruct", "theoremB", "--spec", "ratios:[2^12,4,2],N=2", "--samples", "500"]));
    assert_eq!(v["result"]["per_time"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"spec": "ratios:[1024],N=2", "samples": 300, "seed": 9, "step": 0}"#).unwrap();
    let v = json(&splitword(&["reconstruct", "theoremB", "--config", config.to_str().unwrap(), "--seed", "4"]));
    assert_eq!(v["seed"], 4);
    assert_eq!(v["samples"], 300);
    assert_eq!(v["spec"], "ratios:[1024],N=2");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_splitword"))
        .args(["plan", "--spec", "ratios:[2^32,16],N=2"])
        .env("SPLITWORD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let file = dir.path().join("plan.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(v["command"], "plan");
}

#[test]
fn usage_errors_are_nonzero() {
    let out = splitword(&["classify", "--bogus"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = splitword(&["classify", "--spec", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    let out = splitword(&["metric", "e", "--spec", "ratios:[2,2],N=2", "--n", "-2", "--x", "1234", "--y", "1111"]);
    assert_eq!(out.status.code(), Some(1));
}

fn strip_timestamp(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["result"]["generated_at"] = Value::Null;
    v
}

#[test]
fn verify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = splitword(&["verify", "--seed", "42", "--samples", "3000", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
    assert_eq!(strip_timestamp(&a)["result"]["success"], true);
}
