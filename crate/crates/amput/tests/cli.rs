//! CLI behavior: argument validation, error exits, degenerate contracts,
//! and output schemas. Heavy determinism checks live in the acceptance
//! suite.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("amput-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_model(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn amput(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amput"))
        .args(args)
        .env("AMPUT_THREADS", "2")
        .output()
        .expect("spawn amput")
}

const ATM: &str = r#"{"r":0.05,"d":0.03,"sigma":0.2,"s0":100.0,"k":100.0,"t":1.0}"#;
const ZERO_STRIKE: &str = r#"{"r":0.05,"d":0.0,"sigma":0.2,"s0":100.0,"k":0.0,"t":1.0}"#;

#[test]
fn price_emits_json_and_validates_inputs() {
    let dir = scratch_dir("price");
    let model = write_model(&dir, "m.json", ATM);

    let out = amput(&["price", "--model", &model, "--n", "64", "--scheme", "paper"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["price"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["n"].as_u64(), Some(64));
    assert_eq!(doc["scheme"].as_str(), Some("paper"));

    // n = 0 is rejected.
    let out = amput(&["price", "--model", &model, "--n", "0", "--scheme", "paper"]);
    assert_eq!(out.status.code(), Some(2));

    // Bad model file is rejected.
    let bad = write_model(&dir, "bad.json", r#"{"r":0.0,"d":0,"sigma":0.2,"s0":1,"k":1,"t":1}"#);
    let out = amput(&["price", "--model", &bad, "--n", "8", "--scheme", "paper"]);
    assert_eq!(out.status.code(), Some(2));

    // Risk-neutral probability outside (0,1) is a domain error.
    let wild = write_model(&dir, "wild.json", r#"{"r":2.5,"d":0.0,"sigma":0.05,"s0":100,"k":100,"t":4.0}"#);
    let out = amput(&["price", "--model", &wild, "--n", "1", "--scheme", "rn"]);
    assert_eq!(out.status.code(), Some(2));

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn oracle_rejects_undersized_grids_and_writes_boundary() {
    let dir = scratch_dir("oracle");
    let model = write_model(&dir, "m.json", ATM);

    let out = amput(&["oracle", "--model", &model, "--m", "100", "--nt", "300"]);
    assert_eq!(out.status.code(), Some(2));

    let boundary = dir.join("b.csv");
    let out = amput(&[
        "oracle", "--model", &model, "--m", "300", "--nt", "250",
        "--boundary-out", boundary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&boundary).unwrap();
    assert!(text.starts_with("time_to_maturity,btilde_log,b_stock\n"));
    assert!(text.lines().count() > 200);

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn premium_zero_strike_short_circuits() {
    let dir = scratch_dir("premium");
    let model = write_model(&dir, "m.json", ZERO_STRIKE);
    // The boundary file is not even read for the degenerate contract.
    let out = amput(&["premium", "--model", &model, "--boundary", "/nonexistent.csv"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["premium"].as_f64(), Some(0.0));
    assert_eq!(doc["implied_american"].as_f64(), Some(0.0));
    assert_eq!(doc["gap"].as_f64(), Some(0.0));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn study_converge_flags_degenerate_contract() {
    let dir = scratch_dir("degenerate");
    let model = write_model(&dir, "m.json", ZERO_STRIKE);
    let out_dir = dir.join("out");
    let out = amput(&[
        "study", "converge", "--model", &model, "--out", out_dir.to_str().unwrap(),
        "--schedule", "128,256,512",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["degenerate"].as_bool(), Some(true));
    assert_eq!(doc["failures"].as_array().map(Vec::len), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("convergence.json")).unwrap())
            .unwrap();
    assert_eq!(json["fits"]["degenerate"].as_bool(), Some(true));
    assert!(json["fits"]["slope_loglog"].is_null());
    // CSV carries the rows with zero error.
    let csv = std::fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn study_schedule_validation_errors_exit_2() {
    let dir = scratch_dir("schedule");
    let model = write_model(&dir, "m.json", ATM);
    let out_dir = dir.join("out");
    for schedule in ["", "12,24", "512,256", "64,70000"] {
        let out = amput(&[
            "study", "stopping", "--model", &model, "--out", out_dir.to_str().unwrap(),
            "--schedule", schedule,
        ]);
        assert_eq!(out.status.code(), Some(2), "schedule {schedule:?}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}
