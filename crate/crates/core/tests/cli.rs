use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ainfty(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ainfty")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn analyze_rh_on_one_three() {
    let out = ainfty(&["analyze", "--classes", "rh", "--q", "2", "--omega-spec", "explicit:1,3", "--n", "2"]);
    assert!(out.status.success());
    let v = json(&out)["classes"]["rh"]["value"].as_f64().unwrap();
    assert!((v - 1.118_033_988_749_895).abs() < 1e-15);
}

#[test]
fn czd_on_eight_one_one_one() {
    let out = ainfty(&["czd", "--lambda", "3", "--omega-spec", "explicit:8,1,1,1", "--n", "4"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["selected"].as_array().unwrap().len(), 1);
    assert_eq!(v["selected"][0]["interval"], serde_json::json!([0, 2]));
    assert_eq!(v["selected"][0]["expansion"].as_f64(), Some(2.0));
    assert_eq!(v["residual"], serde_json::json!([2, 3]));
}

#[test]
fn gen_then_analyze_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let p = path.to_str().unwrap();
    let out = ainfty(&["gen", "--omega-spec", "power:0.5,0.5", "--x0", "0.1", "--n", "16", "--format", "csv", "--out", p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("index,omega,g\n"));
    let out = ainfty(&["analyze", "--in", p, "--classes", "ap,exp"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["classes"]["ap"]["value"].as_f64().unwrap() >= 1.0);
    assert!(v["classes"]["exp"]["value"].as_f64().unwrap() >= 1.0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["analyze", "--omega-spec", "power:0.2,-0.3", "--n", "40", "--classes", "all"];
    assert_eq!(ainfty(&args).stdout, ainfty(&args).stdout);
}

#[test]
fn curves_are_written_with_an_index() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ainfty(&["analyze", "--omega-spec", "explicit:4,2,1", "--n", "3", "--classes", "cf,avg,rh", "--curves-dir", d]);
    assert!(out.status.success());
    let index: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(d).join("index.json")).unwrap()).unwrap();
    let keys: Vec<&str> = index.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["avg", "cf"]);
    let cf = std::fs::read_to_string(Path::new(d).join("cf.csv")).unwrap();
    assert_eq!(cf.lines().next(), Some("t,v"));
    assert_eq!(cf.lines().count(), 4);
}

#[test]
fn no_curves_prints_a_notice() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("c");
    let out = ainfty(&["analyze", "--omega-spec", "explicit:1,2", "--n", "2", "--classes", "rh", "--curves-dir", d.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no curve-valued classes"));
    assert!(!d.exists());
}

#[test]
fn usage_and_validation_errors_exit_with_one() {
    assert_eq!(ainfty(&["analyze", "--bogus"]).status.code(), Some(1));
    assert_eq!(ainfty(&["analyze", "--n", "4"]).status.code(), Some(1));
    assert_eq!(ainfty(&["analyze", "--omega-spec", "const:0", "--n", "4"]).status.code(), Some(1));
    assert_eq!(ainfty(&["czd", "--lambda", "1", "--omega-spec", "const:2", "--n", "4"]).status.code(), Some(1));
    assert_eq!(
        ainfty(&["analyze", "--classes", "exp", "--g-mode", "weighted", "--omega-spec", "const:2", "--n", "4"]).status.code(),
        Some(1)
    );
    assert_eq!(ainfty(&["oracle", "--target", "cf", "--omega-spec", "const:2", "--n", "15"]).status.code(), Some(1));
    assert_eq!(ainfty(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_random_cases_pass() {
    let out = ainfty(&["--threads", "2", "verify", "--cases", "6", "--seed", "9", "--max-len", "24"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["passed"], Value::Bool(true));
    assert_eq!(v["cases"].as_array().unwrap().len(), 6);
    assert_eq!(v["summary"]["oracle_checks"].as_u64(), Some(24));
}

#[test]
fn verify_on_a_given_sample_and_edge_subset() {
    let out = ainfty(&["verify", "--omega-spec", "power:0.3,-0.5", "--n", "30", "--edges", "T3,t7,T14", "--cases", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let edges: Vec<&str> = v["cases"][0]["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["edge"].as_str().unwrap())
        .collect();
    assert_eq!(edges, ["T3", "T7", "T14"]);
}

#[test]
fn lambda_oracle_agrees_on_four_one_one() {
    let out = ainfty(&["oracle", "--target", "lambda", "--omega-spec", "explicit:4,1,1", "--n", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["oracle"]["value"].as_f64().unwrap() - 2.0).abs() < 2e-6);
    assert!(v["discrepancy"].as_f64().unwrap() < 1e-6);
}
