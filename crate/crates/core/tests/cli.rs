use std::fs;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_robust-eig");

#[test]
fn run_writes_outputs_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "d = 8\nr = 2\nm = 9\nn_per_r = 10\ntrials = 3\nalpha_grid = [0.0]\n").unwrap();
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--trials", "1", "--alpha-grid", "0,0.1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["trials"], 1);
    assert_eq!(summary["config"]["d"], 8);
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .args(["run", "--alpha-grid", "0.6", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("alpha"));
}

#[test]
fn selftest_passes() {
    let out = Command::new(BIN).arg("selftest").output().unwrap();
    assert!(out.status.success());
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
