//! CLI behavior: config validation, subcommands, artifact re-rendering.

use std::path::{Path, PathBuf};
use std::process::Command;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn stamlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stamlab"))
}

#[test]
fn malformed_config_names_the_offending_key() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(
        &bad,
        r#"
schema_version = 1
name = "bad"
lambdas = [0.5]

[measure_x]
kind = "gaussian"
cov = [[1.0]]
unexpected_key = 3

[measure_y]
kind = "gaussian"
cov = [[1.0]]

[grid]
scheme = "geometric"
nodes = 16
epsilon = 1e-3

[run]
n_paths = 200
master_seed = 1
bounds = []
"#,
    )
    .unwrap();
    let out = stamlab()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("unexpected_key"),
        "diagnostic should name the key: {stderr}"
    );
}

#[test]
fn lambda_outside_unit_interval_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(
        &bad,
        r#"
schema_version = 1
name = "bad"
lambdas = [1.5]

[measure_x]
kind = "gaussian"
cov = [[1.0]]

[measure_y]
kind = "gaussian"
cov = [[1.0]]

[grid]
scheme = "geometric"
nodes = 16
epsilon = 1e-3

[run]
n_paths = 200
master_seed = 1
bounds = []
"#,
    )
    .unwrap();
    let out = stamlab()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambdas"));
}

#[test]
fn entropy_subcommand_reports_three_routes() {
    let out = stamlab()
        .args(["entropy", "--config"])
        .arg(scenario_dir().join("gaussian-pair.toml"))
        .args(["--paths", "2000"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("direct"));
    assert!(stdout.contains("drift-energy"));
    // the N(0,2) value shows up on the direct route
    assert!(stdout.contains("0.1534"), "stdout: {stdout}");
}

#[test]
fn curve_subcommand_writes_csv_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let status = stamlab()
        .args(["curve", "--config"])
        .arg(scenario_dir().join("identical-standard-gaussian.toml"))
        .arg("--out")
        .arg(&out_dir)
        .args(["--paths", "500"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out_dir.join("curve_x.csv")).unwrap();
    assert!(csv.starts_with("t,EGamma_00,"));
    let dat = std::fs::read_to_string(out_dir.join("curve_x.dat")).unwrap();
    assert!(dat.starts_with("# t EGamma_00"));
}

#[test]
fn report_subcommand_rerenders_from_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let status = stamlab()
        .args(["run", "--config"])
        .arg(scenario_dir().join("identical-standard-gaussian.toml"))
        .arg("--out")
        .arg(&out_dir)
        .args(["--paths", "500"])
        .status()
        .unwrap();
    assert!(status.success());
    let original = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    std::fs::remove_file(out_dir.join("summary.csv")).unwrap();
    let status = stamlab()
        .args(["report", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let rerendered = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(original, rerendered);
}

#[test]
fn checks_subcommand_exit_code_tracks_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let status = stamlab()
        .args(["checks", "--config"])
        .arg(scenario_dir().join("identical-standard-gaussian.toml"))
        .arg("--out")
        .arg(tmp.path().join("out"))
        .args(["--paths", "1000"])
        .status()
        .unwrap();
    assert!(status.success());
}
