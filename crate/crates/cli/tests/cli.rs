use std::process::Command;

fn riseig() -> Command {
    Command::new(env!("CARGO_BIN_EXE_riseig"))
}

#[test]
fn runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(
        &config,
        r#"
name = "small"
experiment = "snr_sweep"
n_trials = 2
seed = 7
power_grid_dbm = [0.0, 30.0]

[dimensions]
n_bs = 4
n_ms = 1
n_users = 2
n_ris_elements = [8]
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = riseig()
        .args(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(out.join("small_rates.csv")).unwrap();
    assert!(csv.starts_with("x,method,mean_rate_bpcu,stderr\n"));
    assert!(out.join("small.json").exists());
    assert_eq!(String::from_utf8_lossy(&output.stdout).trim(), out.join("small_rates.csv").display().to_string());
}

#[test]
fn preset_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let output = riseig()
        .args(["fig1b", "--trials", "1", "--seed", "3", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let meta = std::fs::read_to_string(dir.path().join("fig1b.json")).unwrap();
    assert!(meta.contains("\"seed\": 3"));
    assert!(meta.contains("\"n_trials\": 1"));
}

#[test]
fn rejects_unknown_preset_and_missing_input() {
    assert!(!riseig().arg("fig9z").output().unwrap().status.success());
    assert!(!riseig().output().unwrap().status.success());
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "n_trials = 0\n").unwrap();
    let output = riseig().args(["--config", bad.to_str().unwrap()]).output().unwrap();
    assert!(!output.status.success());
}
