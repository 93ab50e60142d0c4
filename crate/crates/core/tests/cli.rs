use std::path::Path;
use std::process::{Command, Output};

fn barsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barsum")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn ck_for_the_plane() {
    let out = barsum(&["limits", "--ck", "--d", "2", "--k", "1", "--alpha", "4"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ck = v["c_k"].as_f64().unwrap();
    assert_eq!(format!("{ck:.5}"), "0.10472");
}

#[test]
fn identity_suite_passes() {
    let out = barsum(&["verify", "--suite", "identity"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("PASS criterion  1 identity"));
}

#[test]
fn unknown_suite_fails() {
    assert_eq!(barsum(&["verify", "--suite", "nonsense"]).status.code(), Some(1));
}

#[test]
fn missing_config_exits_two() {
    let out = barsum(&["experiment", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"density\": {\"d\": 2, \"alpha\": 4},\n  \"regime\": \"I\"\n  \"n\": 500\n}\n").unwrap();
    let out = barsum(&["experiment", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn sample_then_persist() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    let out = barsum(&["sample", "--n", "200", "--seed", "3", "--out", cloud.to_str().unwrap()]);
    assert!(out.status.success());
    let persisted = dir.path().join("persist");
    let out = barsum(&[
        "persist",
        "--input",
        cloud.to_str().unwrap(),
        "--t-max",
        "1.0",
        "--out",
        persisted.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["barcode.csv", "betti_curve.csv", "lifetime.csv"] {
        assert!(persisted.join(f).exists(), "{f}");
    }
}

#[test]
fn indicators_on_a_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.csv");
    let side = 1.0;
    let height = 3f64.sqrt() / 2.0;
    std::fs::write(&path, format!("x1,x2\n0,0\n{side},0\n0.5,{height}\n")).unwrap();
    let out = barsum(&["indicators", "--input", path.to_str().unwrap(), "--t", "1.05"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["h"], 1);
    assert_eq!(v["betti"], 1);
    assert!((v["minus"].as_f64().unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn simulate_writes_paths() {
    let dir = tempfile::tempdir().unwrap();
    for process in ["v", "y"] {
        let out_dir = dir.path().join(process);
        let out = barsum(&[
            "simulate",
            "--process",
            process,
            "--grid",
            "0.5,1",
            "--paths",
            "2",
            "--samples",
            "20000",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(Path::new(&out_dir.join(format!("{process}_plus_1.csv"))).exists());
    }
}

#[test]
fn experiment_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"density": {"d": 2, "alpha": 4}, "regime": "I", "n": 500, "t_grid": [0.5, 1.0],
            "replications": 20, "seed": 1, "target_samples": 20000}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = barsum(&[
        "experiment",
        "--config",
        config.to_str().unwrap(),
        "--workers",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["t_grid"].as_array().unwrap().len(), 2);
}
