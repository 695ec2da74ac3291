//! End-to-end tests of the command-line interface: exit codes, payload
//! contents, machine-output determinism and error diagnostics.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causal-ident"))
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("machine output is one JSON document")
}

fn w1() -> String {
    specs_dir().join("w1.json").to_string_lossy().into_owned()
}

fn w2() -> String {
    specs_dir().join("w2.json").to_string_lossy().into_owned()
}

#[test]
fn eval_gamma_nde_on_w1_matches_the_exact_value() {
    let out = run(&["eval", &w1(), "--param", "gamma_nde", "--mode", "rational", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    assert_eq!(record["result"]["literal"], "7/40");
    assert_eq!(record["claim"], "gamma_nde");

    // float mode agrees within tolerance
    let out = run(&["eval", &w1(), "--param", "gamma_nde", "--output", "json"]);
    let record = stdout_json(&out);
    let v = record["result"]["value"].as_f64().unwrap();
    assert!((v - 0.175).abs() < 1e-12);
}

#[test]
fn eval_psi_g_identifies_the_factual_draw_parameter_on_w2() {
    let psi = run(&["eval", &w2(), "--psi", "psi_g", "--regime", "shift", "--output", "json"]);
    assert_eq!(psi.status.code(), Some(0));
    let psi = stdout_json(&psi)["result"]["value"].as_f64().unwrap();
    let si = run(&["eval", &w2(), "--param", "gamma_mtp_si", "--regime", "shift", "--output", "json"]);
    let si = stdout_json(&si)["result"]["value"].as_f64().unwrap();
    assert!((psi - si).abs() < 1e-9, "psi_g {psi} vs gamma_mtp_si {si}");

    // while the natural-value parameter diverges on this witness
    let mtp = run(&["eval", &w2(), "--param", "gamma_mtp", "--regime", "shift", "--output", "json"]);
    let mtp = stdout_json(&mtp)["result"]["value"].as_f64().unwrap();
    assert!((mtp - psi).abs() > 0.005);
}

#[test]
fn check_reports_membership_per_condition() {
    let out = run(&["check", &w1(), "--class", "m1", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    assert_eq!(record["result"]["holds"], true);

    let out = run(&["check", &w1(), "--class", "m2", "--output", "json"]);
    assert_eq!(out.status.code(), Some(1), "refuted membership exits 1");
    let record = stdout_json(&out);
    assert_eq!(record["result"]["holds"], false);
    let conditions = record["result"]["conditions"].as_array().unwrap();
    let names: Vec<&str> = conditions.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["A1.1", "A1.2", "A1.3", "A2.1", "A2.2"]);
}

#[test]
fn check_b_conditions_on_w2() {
    let out = run(&["check", &w2(), "--b-conditions", "--regime", "shift", "--output", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let record = stdout_json(&out);
    assert_eq!(record["result"]["b14"]["holds"], true);
    assert_eq!(record["result"]["b13"]["holds"], false);
}

#[test]
fn ident_refutes_with_a_witness_and_exit_code_one() {
    let out = run(&[
        "ident", &w1(), "--gamma", "gamma_nde", "--psi", "psi_rde_w",
        "--class", "m1", "--n", "30", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let record = stdout_json(&out);
    assert_eq!(record["result"]["holds"], false);
    assert!(record["result"]["max_gap"].as_f64().unwrap() > 1e-3);
    assert!(record["result"]["witness_model"]["variables"].is_array());
}

#[test]
fn ident_passes_identified_claims() {
    let out = run(&[
        "ident", &w1(), "--gamma", "gamma_rde", "--psi", "psi_rde",
        "--class", "m1", "--n", "20", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    assert_eq!(record["result"]["holds"], true);
    assert!(record["result"]["witness_model"].is_null());
}

#[test]
fn machine_output_is_byte_deterministic() {
    let args = [
        "ident", &w1(), "--gamma", "gamma_nde", "--psi", "psi_rde_w",
        "--class", "m1", "--n", "15", "--output", "json",
    ];
    let a = run(&args.iter().map(|s| &**s).collect::<Vec<_>>());
    let b = run(&args.iter().map(|s| &**s).collect::<Vec<_>>());
    assert_eq!(a.stdout, b.stdout);
    // and independent of the parallelism cap
    let c = bin()
        .args(args.iter().map(|s| &**s))
        .env("CAUSAL_IDENT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn counterexample_emits_a_witness_when_the_floor_is_cleared() {
    let out = run(&[
        "counterexample", &w1(), "--gamma", "gamma_nde", "--psi", "psi_rde_w",
        "--class", "m1", "--budget", "10000", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let record = stdout_json(&out);
    assert_eq!(record["result"]["refuted"], true);
    assert!(record["result"]["gap"].as_f64().unwrap() >= 0.01);
    assert!(record["result"]["witness_model"]["variables"].is_array());
}

#[test]
fn audit_renders_all_four_sections() {
    let dir = tempfile::tempdir().unwrap();
    let record_path = dir.path().join("audit.json");
    let out = run(&[
        "audit", &w1(), "--class", "m1,m2",
        "--gamma", "gamma_rde_w,gamma_nde", "--psi", "psi_rde_w,psi_rde_w",
        "--n", "8", "--budget", "800", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    assert_eq!(record["result"]["holds"], true);
    std::fs::write(&record_path, &out.stdout).unwrap();

    let human = run(&["report", record_path.to_str().unwrap()]);
    assert_eq!(human.status.code(), Some(0));
    let text = String::from_utf8(human.stdout).unwrap();
    for section in ["I1", "I2", "I3", "I4"] {
        assert!(text.contains(section), "missing section {section}:\n{text}");
    }
    assert!(text.contains("witness model attached"));
}

#[test]
fn malformed_specs_exit_two_with_pointer_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");

    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["eval", bad.to_str().unwrap(), "--param", "gamma_nde"]);
    assert_eq!(out.status.code(), Some(2));

    // structurally broken: pmf entry is a boolean
    let mut spec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w1()).unwrap()).unwrap();
    spec["variables"][0]["noise"]["pmf"][0] = serde_json::json!(true);
    std::fs::write(&bad, spec.to_string()).unwrap();
    let out = run(&["eval", bad.to_str().unwrap(), "--param", "gamma_nde"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("/variables/0/noise/pmf/0"), "{err}");
}

#[test]
fn unknown_selectors_and_verbs_are_rejected() {
    let out = run(&["eval", &w1(), "--param", "gamma_bogus"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["frobnicate", &w1()]);
    assert_eq!(out.status.code(), Some(2));
}
