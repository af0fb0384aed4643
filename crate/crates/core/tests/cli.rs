use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fidsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fidsim"))
        .args(args)
        .env_remove("FIDSIM_WORKERS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const CONFIG: &str = r#"
[system]
n_spins = 3
delta_hz = [0.0, -1393.0, 1027.0]
j_hz = [-130.0, 69.0, 50.0]

[noise]
kind = "lorentzian"
width_hz = 28.0

[state]
kind = "thermal"

[grid]
t_max_s = 0.024
n_points = 49

[ensemble]
n_realizations = 200
seed = 3
"#;

#[test]
fn lists_presets() {
    let out = fidsim(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1", "fig2-pps-x10", "fig4b"] {
        assert!(text.lines().any(|l| l == name));
    }
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let out_path = dir.path().join("trace.csv");
    let out = fidsim(&[
        "simulate",
        "--config",
        &config,
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(out_path).unwrap();
    assert!(text.starts_with("t_s,mx,my,mperp,oracle_thermal_mperp\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 50);

    let stdout = fidsim(&["simulate", "--config", &config]);
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), text);
}

#[test]
fn worker_env_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let a = fidsim(&["simulate", "--config", &config, "--workers", "1"]);
    let b = Command::new(env!("CARGO_BIN_EXE_fidsim"))
        .args(["simulate", "--config", &config])
        .env("FIDSIM_WORKERS", "3")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_fidsim"))
        .args(["simulate", "--config", &config])
        .env("FIDSIM_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), "");
    let out = fidsim(&["simulate", "--config", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[ensemble]"));

    let negative = write_config(
        dir.path(),
        &CONFIG.replace("j_hz", "magnification = -1.0\nj_hz"),
    );
    assert_eq!(
        fidsim(&["simulate", "--config", &negative]).status.code(),
        Some(2)
    );
    assert_eq!(fidsim(&["preset", "fig7"]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_4() {
    let out = fidsim(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn preset_print_config_parses() {
    let out = fidsim(&["preset", "fig2-pps-x10", "--print-config", "--seed", "99"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let config = fidsim::config::parse_config(&text).unwrap();
    assert_eq!(config.seed(), 99);
    assert_eq!(config.system.magnification, 10.0);
}

#[test]
fn preset_runs_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = fidsim(&["preset", "fig3", "--out-dir", d, "--realizations", "64"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("fig3-thermal.csv").exists());
    assert!(dir.path().join("fig3-pps.csv").exists());
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let d = dir.path().to_str().unwrap();
    let out = fidsim(&[
        "sweep",
        "--config",
        &config,
        "--param",
        "m",
        "--values",
        "0,2.5",
        "--out-dir",
        d,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("sweep_m=0.csv").exists());
    assert!(dir.path().join("sweep_m=2.5.csv").exists());
    let bad = fidsim(&[
        "sweep",
        "--config",
        &config,
        "--param",
        "realizations",
        "--values",
        "1.5",
        "--out-dir",
        d,
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn validate_passes() {
    let out = fidsim(&["validate", "--realizations", "1024"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
