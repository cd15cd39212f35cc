//! End-to-end runs of the `skewgraph` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn skewgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewgraph"))
        .args(args)
        .env("SKEWGRAPH_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run(text: &str) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let o = skewgraph(&["run", &config, "--out", out.to_str().unwrap()]);
    (o, dir)
}

fn results(dir: &tempfile::TempDir) -> Value {
    let text = std::fs::read_to_string(dir.path().join("out/results.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const BINARY_CODE: &str = r#"
seed = 5
[system]
preset = "binary_ifs"
[experiment]
kind = "code"
theta = { past_tail = [2] }
"#;

#[test]
fn all_twos_code_to_one() {
    let (o, dir) = run(BINARY_CODE);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = results(&dir);
    let point = r["summary"]["point"][0].as_f64().unwrap();
    assert!((point - 1.0).abs() < 1e-9, "{point}");
    assert_eq!(r["summary"]["converged"], Value::Bool(true));
}

#[test]
fn results_carry_provenance() {
    let (o, dir) = run(BINARY_CODE);
    assert_eq!(o.status.code(), Some(0));
    let r = results(&dir);
    let p = &r["provenance"];
    assert_eq!(p["seed"], 5);
    assert_eq!(p["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(p["config"]["system"]["preset"], "binary_ifs");
    assert_eq!(p["config"]["experiment"]["max_depth"], 1000);
    assert_eq!(p["config_hash"].as_str().unwrap().len(), 64);
    assert!(dir.path().join("out/data.csv").exists());

    // same config, same hash; a different seed changes it
    let (_, again) = run(BINARY_CODE);
    assert_eq!(
        results(&again)["provenance"]["config_hash"],
        p["config_hash"]
    );
    let (_, other) = run(&BINARY_CODE.replace("seed = 5", "seed = 6"));
    assert_ne!(
        results(&other)["provenance"]["config_hash"],
        p["config_hash"]
    );
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &BINARY_CODE.replace("seed = 5\n", ""));
    let o = skewgraph(&["validate", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
    let out = dir.path().join("out");
    let o = skewgraph(&[
        "run",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(results(&dir)["provenance"]["seed"], 9);
}

#[test]
fn disconnected_spine_has_two_rows() {
    let (o, dir) = run(r#"
seed = 1
[system]
preset = "theorem2"
m = 2
[experiment]
kind = "spine"
depth = 200
theta = { past_tail = [1, 2], future_tail = [1] }
"#);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/data.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert_eq!(results(&dir)["summary"]["component_count"], 2);
}

#[test]
fn bad_row_sum_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
seed = 1
[system]
preset = "binary_ifs"
[base]
transition = [[0.5, 0.5], [0.5, 0.4]]
[experiment]
kind = "target"
"#,
    );
    for cmd in ["validate", "run"] {
        let o = skewgraph(&[cmd, &config]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("0.9"), "{}", stderr(&o));
    }
}

#[test]
fn identity_maps_exhaust_the_coding_budget() {
    let (o, dir) = run(r#"
seed = 1
[system]
preset = "identity"
[experiment]
kind = "code"
max_depth = 50
theta = { past_tail = [1, 2] }
"#);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let r = results(&dir);
    assert_eq!(r["summary"]["converged"], Value::Bool(false));
}

#[test]
fn curves_come_with_a_plot() {
    let (o, dir) = run(r#"
seed = 2
[system]
preset = "uniform_contraction"
c = "1/2"
[experiment]
kind = "decay"
depths = { start = 2, stop = 10, step = 2 }
n_samples = 100
"#);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("out/plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let lambda = results(&dir)["summary"]["fitted_lambda"].as_f64().unwrap();
    assert!((lambda - 0.5).abs() < 1e-9, "{lambda}");
}

#[test]
fn presets_are_listed() {
    let o = skewgraph(&["presets"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["binary_ifs", "msplits", "theorem2", "porcupine"] {
        assert!(text.contains(name), "{text}");
    }
}
