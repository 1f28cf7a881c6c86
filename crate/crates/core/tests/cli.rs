//! End-to-end runs of the `eqbundle` binary: exit codes, report fields, output files.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eqbundle"))
}

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(format!("{name}.scn"))
        .display()
        .to_string()
}

fn run(args: &[&str]) -> (i32, Value, Output) {
    let out = bin().args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v, out)
}

#[test]
fn verdict_on_worked_example_cancels() {
    let (code, v, _) = run(&["verdict", &example("z_on_r_half")]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], "eqbundle.report/1");
    assert_eq!(v["outcome"], "CANCELS");
    assert_eq!(v["result"]["verdict"], "CANCELS");
    let beta = v["result"]["beta"]["covector_at_basepoint"][0].as_f64().unwrap();
    assert!((beta - 0.5).abs() < 1e-9);
    let kappa = v["result"]["k_membership"]["kappa"][0].as_f64().unwrap();
    assert!((kappa - 0.5).abs() < 1e-9);
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["assumptions"]["a1"], true);
}

#[test]
fn holonomy_of_unit_path_is_one_half() {
    let (code, v, _) = run(&["holonomy", &example("z_on_r_half"), "--word", "g^1", "--path", "unit"]);
    assert_eq!(code, 0);
    let h = v["result"]["holonomy"]["value"].as_f64().unwrap();
    assert!((h - 0.5).abs() < 1e-8, "{h}");
}

#[test]
fn corrupted_cocycle_exits_one_with_witness() {
    let (code, v, _) = run(&["check-cocycle", &example("z2_corrupted")]);
    assert_eq!(code, 1);
    assert_eq!(v["outcome"], "error");
    assert_eq!(v["error"]["kind"], "cocycle-violation");
    assert_eq!(v["error"]["stage"], "check-cocycle");
    assert_eq!(v["error"]["point"].as_array().unwrap().len(), 2);
    assert!(v["result"]["cocycle"]["max_residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn valid_cocycle_passes() {
    let (code, v, _) = run(&["check-cocycle", "z2_character"]);
    assert_eq!(code, 0);
    assert_eq!(v["outcome"], "pass");
}

#[test]
fn obstructed_exits_two() {
    let (code, v, _) = run(&["verdict", "rotation"]);
    assert_eq!(code, 2);
    assert_eq!(v["outcome"], "OBSTRUCTED");
    assert!(v["result"]["witness"].is_object());
}

#[test]
fn inconclusive_exits_three_and_names_the_ansatz() {
    let (code, v, _) = run(&["verdict", "z_on_r_periodic_candidates"]);
    assert_eq!(code, 3);
    let note = v["result"]["note"].as_str().unwrap();
    assert!(note.contains("not a proof"), "{note}");
    assert!(note.contains("ansatz"), "{note}");
}

#[test]
fn local_verdict_needs_a_locality_section() {
    let (code, _, _) = run(&["verdict", "--local", "lattice_z_example"]);
    assert_eq!(code, 0);
    let (code, v, _) = run(&["verdict", "--local", "trivial"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "invalid-input");
}

#[test]
fn errors_exit_one() {
    let (code, v, _) = run(&["verdict", "no_such_scenario"]);
    assert_eq!(code, 1);
    assert_eq!(v["outcome"], "error");
    let (code, v, _) = run(&["holonomy", "z_on_r_half", "--word", "g", "--path", "missing"]);
    assert_eq!(code, 1);
    assert!(v["error"]["message"].as_str().unwrap().contains("missing"));
}

#[test]
fn syntax_errors_carry_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.scn");
    let text = std::fs::read_to_string(example("z_on_r_half")).unwrap().replacen("\"1/2\"", "\"sin(x1\"", 1);
    std::fs::write(&path, text).unwrap();
    let (code, v, _) = run(&["verdict", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "syntax");
    assert!(v["error"]["message"].as_str().unwrap().contains("line"));
}

#[test]
fn flags_are_echoed_into_the_config() {
    let (code, v, _) = run(&[
        "verdict",
        "z_on_r_half",
        "--seed",
        "11",
        "--tol",
        "1e-4",
        "--probes",
        "64",
        "--max-word-len",
        "2",
    ]);
    assert_eq!(code, 0);
    let c = &v["config"];
    assert_eq!(c["seed"], 11);
    assert_eq!(c["probes"], 64);
    assert_eq!(c["holdout"], 64);
    assert_eq!(c["max_word_len"], 2);
    assert_eq!(c["tol_holdout"].as_f64(), Some(1e-4));
    assert!((c["tol_fit"].as_f64().unwrap() - 1e-5).abs() < 1e-20);
}

#[test]
fn out_writes_the_report_and_text_format_is_readable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = bin()
        .args(["anomaly", "rotation", "--section", "tilted", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "anomaly");
    assert_eq!(v["result"]["section"], "tilted");
    let (_, _, out) = run(&["curvature", "euclidean_plane", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("eqbundle curvature [euclidean_plane]"), "{text}");
    assert!(text.contains("outcome: pass (exit 0)"));
}

#[test]
fn selftest_on_one_scenario() {
    let (code, v, _) = run(&["selftest", "torus_flat", "--seed", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["seed"], 3);
    assert_eq!(v["result"]["scenarios"], serde_json::json!(["torus_flat"]));
}
