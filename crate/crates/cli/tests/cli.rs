//! End-to-end runs of the `curved-kepler` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_curved-kepler"));
    cmd.env_remove("CURVED_KEPLER_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn passing_verify_exits_zero() {
    let out = run(&["verify", "--deterministic", "--kappa", "1", "--b", "0.2,0.4", "--sample", "10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = report(&out);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["kind"], "verify");
    assert_eq!(doc["pass"], true);
    assert!(doc.get("run").is_none());
}

#[test]
fn failing_check_exits_one() {
    // nothing is accurate to 1e-30, so roundoff alone fails the identities
    let out = run(&["verify", "--deterministic", "--kappa=-1", "--b", "0.2,0.4", "--sample", "5", "--tolerance", "1e-30"]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["pass"], false);

    let out = run(&["rank", "--deterministic", "--kappa", "0", "--b", "0.2,0.4,0.6", "--expected-rank", "4"]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["body"]["modal_rank"], 5);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.json", r#"{"params": {"kappa": 1, "coupling": 1, "b": [0.1, 0.2]}, "verify": {"samples": 3}}"#);
    assert_eq!(code(&run(&["verify", "--config", &typo])), 2);
    assert_eq!(code(&run(&["verify", "--kappa", "1"])), 2);
    assert_eq!(code(&run(&["verify", "--b", "0.1,inf"])), 2);
    assert_eq!(code(&run(&["verify", "--b", "0.1"])), 2);
    assert_eq!(code(&run(&["verify", "--b", "0.1,0.2", "--suite", "bogus"])), 2);
    let out = bin().args(["verify", "--b", "0.1,0.2", "--sample", "2"]).env("CURVED_KEPLER_SEED", "abc").output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn sampler_failure_exits_three() {
    // with kappa = -1 and large b no start below the escape energy exists
    let out = run(&["simulate", "--deterministic", "--kappa=-1", "--b", "2,2", "--steps", "10"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn integration_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "plunge.json",
        r#"{"params": {"kappa": 0, "coupling": 1, "b": [0, 0]},
            "simulate": {"start": {"chart": "poincare", "q": [0.05, 0.0], "p": [-3.0, 0.0]},
                         "integrator": {"step": 0.05, "steps": 100}}}"#,
    );
    assert_eq!(code(&run(&["simulate", "--deterministic", "--config", &cfg])), 4);

    // an escaping orbit cannot close
    let out = run(&["simulate", "--deterministic", "--kappa", "0", "--b", "0.1,0.1", "--steps", "200", "--closure-tolerance", "1e-4"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "seed.json", r#"{"seed": 11, "params": {"kappa": 0, "coupling": 1, "b": [0.1, 0.2]}}"#);
    let seed_of = |args: &[&str], env: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["rank", "--points", "2"]).args(args);
        if let Some(e) = env {
            cmd.env("CURVED_KEPLER_SEED", e);
        }
        report(&cmd.output().unwrap())["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&["--b", "0.1,0.2"], Some("42")), 42);
    assert_eq!(seed_of(&["--b", "0.1,0.2", "--deterministic"], None), 0);
    assert_eq!(seed_of(&["--config", &cfg], Some("42")), 11);
    assert_eq!(seed_of(&["--config", &cfg, "--seed", "5"], Some("42")), 5);
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"seed": 3, "chart": "beltrami",
            "params": {"kappa": 1, "coupling": 2, "b": [0.1, 0.2, 0.3]},
            "rank": {"points": 3, "set": "quadratic"}}"#,
    );
    let doc = report(&run(&["rank", "--config", &cfg, "--deterministic"]));
    assert_eq!(doc["chart"], "beltrami");
    assert_eq!(doc["body"]["points"], 3);
    assert_eq!(doc["body"]["modal_rank"], 4);

    let doc = report(&run(&["rank", "--config", &cfg, "--deterministic", "--kappa=-1", "--chart", "poincare", "--set", "maximal"]));
    assert_eq!(doc["params"]["kappa"], -1.0);
    assert_eq!(doc["params"]["coupling"], 2.0);
    assert_eq!(doc["chart"], "poincare");
    assert_eq!(doc["body"]["modal_rank"], 5);
}

#[test]
fn simulate_writes_csv_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("orbit.csv");
    let traj = dir.path().join("orbit.json");
    let out = run(&[
        "simulate", "--deterministic", "--kappa", "1", "--b", "0.1,0.2",
        "--steps", "50", "--drift-tolerance", "1e-3",
        "--csv", csv.to_str().unwrap(), "--trajectory-json", traj.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..5], ["t", "q_1", "q_2", "p_1", "p_2"]);
    assert!(header.contains(&"H".to_string()));
    assert_eq!(reader.records().count(), 51);

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&traj).unwrap()).unwrap();
    assert_eq!(doc["kind"], "trajectory");
    assert_eq!(doc["body"]["times"].as_array().unwrap().len(), 51);
}

#[test]
fn transform_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "state.json",
        r#"{"schema_version": 1, "kappa": -1, "state": {"chart": "poincare", "q": [0.3, -0.2], "p": [0.5, 1.5]}}"#,
    );
    let there = dir.path().join("beltrami.json");
    let out = run(&["transform", "--input", &input, "-o", there.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&there).unwrap()).unwrap();
    assert_eq!(doc["state"]["chart"], "beltrami");

    let back = report(&run(&["transform", "--input", there.to_str().unwrap()]));
    assert_eq!(back["state"]["chart"], "poincare");
    for (got, want) in back["state"]["q"].as_array().unwrap().iter().zip([0.3, -0.2]) {
        assert!((got.as_f64().unwrap() - want).abs() < 1e-14);
    }

    let bad = write(dir.path(), "bad.json", r#"{"schema_version": 1, "kappa": -1, "state": {"chart": "poincare", "q": [3.0, 0.0], "p": [0.0, 0.0]}}"#);
    assert_eq!(code(&run(&["transform", "--input", &bad])), 2);
}

#[test]
fn limits_report_passes() {
    let out = run(&["limits", "--deterministic", "--kappa", "1", "--b", "0.3,0.5", "--points", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["body"]["sweep"].as_array().unwrap().len(), 3);
}
