use std::path::Path;
use std::process::{Command, Output};

use higher_ground::spectral::GridSpec;
use higher_ground::studies::{field_from_bytes, StudyConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_higher-ground"))
        .args(args)
        .env("HIGHER_GROUND_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn hartree_on_a_line_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", "[nonlinearity]\nkind = \"hartree3d\"\n");
    let out = run(&["groundstate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("requires d = 3"), "{err}");
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    assert_eq!(run(&["sweep-c", "--J", "1,2", "--out", o]).status.code(), Some(2));
    assert_eq!(run(&["groundstate", "--n", "100", "--out", o]).status.code(), Some(2));
    assert_eq!(run(&["groundstate", "--eps", "0.1,0.2", "--out", o]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", "colour = 1\n");
    assert_eq!(run(&["groundstate", "--config", &bad, "--out", o]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.toml", "[minimize]\nmax_iters = 2\nrestarts = 1\n");
    let out = run(&["groundstate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
}

#[test]
fn defaults_round_trip() {
    let out = run(&["defaults"]);
    assert_eq!(out.status.code(), Some(0));
    let cfg = StudyConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, StudyConfig::default());
}

#[test]
fn groundstate_run_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("gs");
    let out = run(&["groundstate", "--n", "256", "--box", "30", "--seed", "3", "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(o.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "groundstate");
    assert_eq!(manifest["config"]["grid"]["n"], 256);
    assert_eq!(manifest["config"]["seed"], 3);
    assert!(manifest["residuals"]["pde_residual"].as_f64().unwrap() < 1e-9);
    let text = std::fs::read_to_string(o.join("manifest.json")).unwrap();
    assert!(!text.contains("time"), "manifest carries no timestamps");

    let log = std::fs::read_to_string(o.join("groundstate_log.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("iter,action,residual,step"));

    let grid = GridSpec::new(1, 256, 30.0).unwrap();
    let q = field_from_bytes(grid, &std::fs::read(o.join("groundstate.bin")).unwrap()).unwrap();
    let peak = q.to_physical().max_abs();
    assert!((peak - 2f64.sqrt()).abs() < 1e-6, "{peak}");
}

#[test]
fn contraction_log_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("c");
    let out = run(&["contraction", "--eps", "0.05", "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(o.join("contraction_log.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("iter,residual,contraction_factor,update,inner_iterations"));
    assert!(lines.count() >= 2);
}

#[test]
fn verify_reports_the_adversarial_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("v");
    let out = run(&["verify", "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout
        .lines()
        .find(|l| l.contains("coefficients: [-0.1]"))
        .expect("adversarial symbol listed");
    assert!(line.starts_with("FAIL") && line.contains("at xi="), "{line}");
}
