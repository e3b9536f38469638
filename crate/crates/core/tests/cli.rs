use std::path::Path;
use std::process::{Command, Output};

fn curvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const K2_UPSILON: &str = r#"{"command": "curvature", "seed": 11,
  "inputs": {"chain": {"graph": {"complete": 2}}, "mode": "upsilon", "budget": {"samples": 2000, "descents": 4}}}"#;

#[test]
fn validate_reports_named_problems() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", K2_UPSILON);
    let out = curvlab(&["validate", &good]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");

    let bad = write(dir.path(), "bad.json", r#"{"command": "sorcery"}"#);
    let out = curvlab(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`command`"));

    let unseeded = write(
        dir.path(),
        "unseeded.json",
        r#"{"command": "mlsi", "inputs": {"chain": {"graph": {"complete": 3}}}}"#,
    );
    let out = curvlab(&["validate", &unseeded]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`seed`"));
}

#[test]
fn runs_are_deterministic_and_embed_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k2.json", K2_UPSILON);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = curvlab(&["curvature", "--config", &cfg, "--out", p.to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let v: serde_json::Value = serde_json::from_str(&ta).unwrap();
    assert_eq!(v["config"]["command"], "curvature");
    assert!((v["result"]["global_kappa"].as_f64().unwrap() - 2.0).abs() < 1e-2);
    // --seed overrides the config seed and is recorded
    let out = curvlab(&["curvature", "--config", &cfg, "--seed", "5"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 5);
}

#[test]
fn violation_findings_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "star.json",
        r#"{"command": "curvature", "seed": 1,
            "inputs": {"chain": {"graph": {"star": 3}}, "mode": "upsilon", "kappa": 0, "verify": true,
                       "budget": {"samples": 2000, "descents": 4}}}"#,
    );
    let out = curvlab(&["curvature", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["violation_found"], true);
}

#[test]
fn operational_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k.json",
        r#"{"command": "frac-kernel", "inputs": {"beta": 2.5, "t": 1, "X": 5, "h": 0.5}}"#,
    );
    assert_eq!(
        curvlab(&["frac-kernel", "--config", &cfg]).status.code(),
        Some(1)
    );
    // command on the line must match the config
    assert_eq!(curvlab(&["mlsi", "--config", &cfg]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        curvlab(&["frac-kernel", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k.json",
        r#"{"command": "frac-kernel", "inputs": {"beta": 1, "t": 1, "X": 2, "h": 0.5}}"#,
    );
    let out = curvlab(&["frac-kernel", "--config", &cfg, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,G"));
    let mid: Vec<f64> = lines
        .nth(4)
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(mid[0], 0.0);
    assert!((mid[1] - 1.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut seen = 0;
    for entry in std::fs::read_dir(root.join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if !text.contains("\"command\"") {
            continue;
        }
        let out = Command::new(env!("CARGO_BIN_EXE_curvlab"))
            .current_dir(&root)
            .args(["validate", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        seen += 1;
    }
    assert!(seen >= 10);
}
