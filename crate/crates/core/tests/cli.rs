use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_intrinsic-lab");

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

const POLYDISK: &str = r#"{
  "domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 1.0},
  "points": [
    {"x": [0.0, 0.0], "y": [0.3, 0.3]},
    {"x": [[0.1, 0.2], 0.0], "y": [0.4, -0.3]}
  ]
}"#;

#[test]
fn malformed_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{ not json"),
        ("unknown.json", r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 0.05}, "colour": 1}"#),
        ("range.json", r#"{"domain": {"n": 2, "r": 1.5, "R": 1.0, "epsilon": 0.05}}"#),
        (
            "outside.json",
            r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 0.05}, "points": [{"x": [0, 0], "y": [0.5, 0.5]}]}"#,
        ),
    ];
    for (name, text) in cases {
        let cfg = write(dir.path(), name, text);
        let out = run(&["bounds", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"), "{name}");
    }
    let out = run(&["bounds", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_run_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "poly.json", POLYDISK);
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = Command::new(BIN)
            .env("INTRINSIC_LAB_THREADS", threads)
            .args(["bounds", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", "7"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(out_dir.join("bounds.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("pair,x,y,c_lb,c_witness,l_ub,k2_ub,k3_ub,k_witness,ordering_ok"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "poly.json", POLYDISK);
    let out = Command::new(BIN)
        .env("INTRINSIC_LAB_THREADS", "many")
        .args(["thresholds", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thresholds_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "poly.json", POLYDISK);
    let out = run(&["thresholds", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("thresholds.csv")).unwrap();
    assert_eq!(text.lines().count(), 71);
}

#[test]
fn gap_scan_base_outside_the_level_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "gap.json",
        r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 1.0},
            "gap_scan": {"level": 1, "base": [0.6, 0.0]}}"#,
    );
    let out = run(&["gap-scan", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exhaustion level"));
}

#[test]
fn ke_non_convergence_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ke.json",
        r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 0.05},
            "grid_config": {"resolution": 32, "max_iter": 1}}"#,
    );
    let out = run(&["ke", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("ke_residual.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ke_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], false);
}

#[test]
fn ke_run_writes_grid_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ke.json",
        r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 0.05},
            "grid_config": {"resolution": 32},
            "points": [{"x": [0, 0], "y": [0.15, 0.15]}]}"#,
    );
    let out = run(&["ke", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = std::fs::read_to_string(dir.path().join("ke_grid.csv")).unwrap();
    assert!(grid.starts_with("t1,t2,u,g11,g12,g22,residual"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ke_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["eq5"]["passed"], true);
    assert!(summary["pairs"][0]["bracket"]["lower_margin"].as_f64().unwrap() > 0.0);
}
