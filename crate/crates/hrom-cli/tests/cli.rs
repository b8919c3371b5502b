//! End-to-end checks of the `hrom` binary: exit codes, output files, config
//! overrides, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn hrom() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hrom"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_short_walk_config(dir: &Path) -> PathBuf {
    let path = dir.join("short_walk.cfg");
    std::fs::write(
        &path,
        "gait.duration_s = 0.6\nsim.duration_s = 0.6\nout_dir = unused\n",
    )
    .unwrap();
    path
}

#[test]
fn simulate_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_walk_config(tmp.path());
    let out = tmp.path().join("run");
    let status = hrom()
        .args(["simulate"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for file in [
        "trajectory.csv",
        "meta.json",
        "body_states.csv",
        "joint_traj.csv",
        "foot_states.csv",
        "grf.csv",
        "thruster_forces.csv",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let meta = std::fs::read_to_string(out.join("meta.json")).unwrap();
    assert!(meta.contains("\"duration\": 0.6"));
}

#[test]
fn simulate_rejects_malformed_config_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "gait.v_rev_mps = 0.1\n").unwrap();
    let out = tmp.path().join("run");
    let output = hrom()
        .args(["simulate"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists(), "no output directory on config error");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("gait.v_rev_mps"),
        "error names the key: {stderr}"
    );
}

#[test]
fn simulate_dt_override_echoed_in_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_walk_config(tmp.path());
    let out = tmp.path().join("run");
    let status = hrom()
        .args(["simulate"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--dt", "0.0005"])
        .status()
        .unwrap();
    assert!(status.success());
    let meta = std::fs::read_to_string(out.join("meta.json")).unwrap();
    assert!(
        meta.contains("\"dt\": 0.0005"),
        "metadata echoes the override"
    );
}

#[test]
fn simulate_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_walk_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let status = hrom()
            .args(["simulate"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in ["trajectory.csv", "meta.json", "grf.csv", "body_states.csv"] {
        let bytes_a = std::fs::read(a.join(file)).unwrap();
        let bytes_b = std::fs::read(b.join(file)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{file} differs between runs");
    }
}

#[test]
fn out_dir_falls_back_to_env_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.cfg");
    std::fs::write(
        &cfg,
        "gait.duration_s = 0.2\nsim.duration_s = 0.2\nout_dir = from_config\n",
    )
    .unwrap();
    let root = tmp.path().join("root");
    let status = hrom()
        .env("HROM_OUT_DIR", &root)
        .args(["simulate"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(root.join("from_config/trajectory.csv").exists());
}

#[test]
fn optimize_double_integrator_converges_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("di");
    let status = hrom()
        .args(["optimize"])
        .arg(repo_config("double_integrator.cfg"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("solver_report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(value["report"]["status"], "Converged");
    let cost = value["report"]["cost"].as_f64().unwrap();
    assert!((cost - 12.0).abs() / 12.0 < 0.02, "cost {cost}");
    let c = value["report"]["constraint_inf_norm"].as_f64().unwrap();
    assert!(c < 1e-4);
    assert!(out.join("solution.csv").exists());
}

#[test]
fn optimize_rejects_single_node_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("di");
    let output = hrom()
        .args(["optimize"])
        .arg(repo_config("double_integrator.cfg"))
        .args(["--n", "1"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn optimize_reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let status = hrom()
            .args(["optimize"])
            .arg(repo_config("double_integrator.cfg"))
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        std::fs::read(a.join("solver_report.json")).unwrap(),
        std::fs::read(b.join("solver_report.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("solution.csv")).unwrap(),
        std::fs::read(b.join("solution.csv")).unwrap()
    );
}

#[test]
fn verify_filter_limits_output() {
    let output = hrom()
        .args(["verify", "--filter", "contact"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("contact_grf_formula"));
    assert!(!stdout.contains("walking_displacement"));
    assert!(stdout.contains("1 checks, 1 passed, 0 failed"));
}

#[test]
fn bundled_walking_config_covers_full_duration() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("walk");
    let status = hrom()
        .args(["simulate"])
        .arg(repo_config("paper_walk.cfg"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert!((t - 3.5).abs() < 1e-9, "trajectory covers 3.5 s, got {t}");
}
