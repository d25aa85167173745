//! End-to-end tests of the `akgeo` binary: exit codes, report formats,
//! determinism, and environment-variable handling.

use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn akgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_akgeo"))
        .args(args)
        .env_remove("AKGEO_TOL")
        .output()
        .expect("binary runs")
}

fn akgeo_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_akgeo"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().expect("temp file");
    f.write_all(content.as_bytes()).expect("write");
    f
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn analyze_kodaira_thurston_text_report() {
    let spec = write_temp(r#"{"family": "kodaira_thurston", "a": 2}"#);
    let output = akgeo(&["analyze", spec.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("real scalar curvature = -0.5"));
    assert!(text.contains("overall: PASS"));
}

#[test]
fn analyze_json_report_is_byte_identical_across_runs() {
    let spec = write_temp(r#"{"family": "nakamura", "t": [0.1, -0.2, 0.25, 0.15]}"#);
    let path = spec.path().to_str().unwrap();
    let first = akgeo(&["analyze", path, "--report", "json"]);
    let second = akgeo(&["analyze", path, "--report", "json"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);

    let report: serde_json::Value = serde_json::from_slice(&first.stdout).expect("valid json");
    assert_eq!(report["family"], "nakamura");
    assert_eq!(report["dim"], 6);
    assert_eq!(report["scal_complex"], 0.0);
    assert_eq!(report["plurigenus"]["kappa"], "-infinity");
    assert_eq!(report["plurigenus"]["per_m"]["1"], 0);
    assert_eq!(report["verification"]["pass"], true);
}

#[test]
fn analyze_json_golden_values() {
    let spec = write_temp(r#"{"family": "kodaira_thurston", "a": 2}"#);
    let output = akgeo(&["analyze", spec.path().to_str().unwrap(), "--report", "json"]);
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).expect("valid json");
    assert_eq!(report["scal_real"], -0.5);
    assert_eq!(report["ricci_real"][2][2], -1.5);
    assert_eq!(report["ricci_real"][3][3], 1.0);
    assert_eq!(report["classification"]["almost_kahler"], true);
    assert_eq!(report["classification"]["integrable"], false);
    // theta^1_2 = (sqrt2/2) Phi^2 emitted with 1-based frame indices.
    let term = &report["theta"][0][1]["terms"][0];
    assert_eq!(term["indices"][0], 2);
    let re = term["re"].as_f64().unwrap();
    // The report rounds to 12 significant digits, within 1e-12 of sqrt(2)/2.
    assert!((re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn analyze_writes_to_a_file() {
    let spec = write_temp(r#"{"family": "kodaira_thurston", "a": 1}"#);
    let dir = tempfile::tempdir().expect("temp dir");
    let out_path = dir.path().join("report.json");
    let output = akgeo(&[
        "analyze",
        spec.path().to_str().unwrap(),
        "--report",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stdout.is_empty());
    let written = std::fs::read_to_string(&out_path).expect("report written");
    let report: serde_json::Value = serde_json::from_str(&written).expect("valid json");
    assert_eq!(report["scal_real"], -0.125);
}

#[test]
fn analyze_explicit_description_runs_structural_checks_only() {
    let spec = write_temp(
        r#"{
        "dim": 4,
        "structure": [],
        "j": [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
        "metric": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    }"#,
    );
    let output = akgeo(&["analyze", spec.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("d_squared"));
    // No closed-form tables for an explicit manifold.
    assert!(!text.contains("] theta:"));
}

#[test]
fn missing_file_and_bad_json_exit_2() {
    let output = akgeo(&["analyze", "/nonexistent/manifold.json"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));

    let bad = write_temp("{ not json");
    let output = akgeo(&["analyze", bad.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn impossible_tolerance_fails_verification_with_exit_1() {
    let spec = write_temp(r#"{"family": "kodaira_thurston", "a": 2}"#);
    // Tighter than machine epsilon: table comparisons cannot pass.
    let output = akgeo(&["verify", spec.path().to_str().unwrap(), "--tol", "1e-30"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stdout_of(&output).contains("FAIL"));
}

#[test]
fn tolerance_env_variable_is_honored_and_flag_wins() {
    let spec = write_temp(r#"{"family": "kodaira_thurston", "a": 2}"#);
    let path = spec.path().to_str().unwrap();
    let output = akgeo_with_env(&["verify", path], "AKGEO_TOL", "1e-30");
    assert_eq!(output.status.code(), Some(1));
    // The explicit flag overrides the hostile environment.
    let output = akgeo_with_env(&["verify", path, "--tol", "1e-9"], "AKGEO_TOL", "1e-30");
    assert_eq!(output.status.code(), Some(0));
    // Unparsable env values fall back to the default.
    let output = akgeo_with_env(&["verify", path], "AKGEO_TOL", "not-a-number");
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn verify_sweeps_a_parameter_grid() {
    let spec = write_temp(r#"{"family": "nakamura", "t": [0, 0, 0, 0]}"#);
    let output = akgeo(&[
        "verify",
        spec.path().to_str().unwrap(),
        "--grid",
        "t4=0:0.1:0.3",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("overall: PASS (4 points)"));
    assert!(text.contains("t=[0,0,0,0.3]"));

    let output = akgeo(&[
        "verify",
        spec.path().to_str().unwrap(),
        "--grid",
        "bogus=0:1:2",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_rejects_explicit_descriptions() {
    let spec = write_temp(
        r#"{
        "dim": 4,
        "structure": [],
        "j": [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
        "metric": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    }"#,
    );
    let output = akgeo(&["verify", spec.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("family"));
}

#[test]
fn kodaira_subcommand_decides_both_sides_of_the_wall() {
    let output = akgeo(&["kodaira", "--t", "0,0,0,0", "--m-max", "3"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("P_1 = 1"));
    assert!(text.contains("P_3 = 1"));
    assert!(text.contains("kappa = 0"));

    let output = akgeo(&["kodaira", "--t", "0.1,-0.2,0.25,0.15", "--m-max", "2"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("P_1 = 0"));
    assert!(text.contains("kappa = -infinity"));

    let output = akgeo(&["kodaira", "--t", "1,2"]);
    assert_eq!(output.status.code(), Some(2));

    // Parameters outside the deformation domain are rejected.
    let output = akgeo(&["kodaira", "--t", "0.9,0.9,0,0"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn shipped_sample_descriptions_analyze_cleanly() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    for name in [
        "kodaira_thurston.json",
        "nakamura.json",
        "flat_torus.json",
        "explicit_nilmanifold.json",
    ] {
        let path = dir.join(name);
        let output = akgeo(&["analyze", path.to_str().unwrap()]);
        assert_eq!(
            output.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
}
