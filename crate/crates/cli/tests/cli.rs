use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
[reservoir]
sites = 256
nodes = 64

[encoder]
grid_side_px = 32
disk_radius_px = 15.0
sequence_length = 120
test_length = 60

[training]
epochs = 30

[metrics]
consistency_repetitions = 3
"#;

fn pnn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn stderr_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("JSON on stderr")
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn train_writes_curves() {
    let dir = workspace();
    let v = stdout_json(&pnn(dir.path(), &["--config", "small.toml", "--out", "t", "train"]));
    assert!(v["train_ser"].as_f64().unwrap() <= 1.0);
    let curves = std::fs::read_to_string(dir.path().join("t/curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(lines.next(), Some("class,epoch,epsilon,accepted,flips"));
    // 8 classes, epochs 0..=30 each.
    assert_eq!(lines.count(), 8 * 31);
    assert!(dir.path().join("t/train.json").exists());
}

#[test]
fn metric_subcommands_emit_reports() {
    let dir = workspace();
    let c = stdout_json(&pnn(dir.path(), &["--config", "small.toml", "--out", "m", "consistency"]));
    assert!(c["c_total"].as_f64().unwrap() > 0.0);
    assert_eq!(c["c_node"].as_array().unwrap().len(), 64);
    let d = stdout_json(&pnn(dir.path(), &["--config", "small.toml", "--out", "m", "dimensionality"]));
    assert!(d["k_min"].as_u64().unwrap() >= 1);
    assert_eq!(d["indicator_values"].as_array().unwrap().len(), 63);
    let p = stdout_json(&pnn(dir.path(), &["--config", "small.toml", "--out", "m", "probe"]));
    assert!(p["D"].as_f64().unwrap() > 0.0);
    for f in ["consistency.json", "dimensionality.json", "probe.json", "probe_map.csv"] {
        assert!(dir.path().join("m").join(f).exists(), "{f}");
    }
}

#[test]
fn seed_flag_changes_and_fixes_results() {
    let dir = workspace();
    let run = |seed: &str, out: &str| {
        stdout_json(&pnn(dir.path(), &["--config", "small.toml", "--seed", seed, "--out", out, "dimensionality"]))
    };
    assert_eq!(run("5", "a")["eigenvalues"], run("5", "b")["eigenvalues"]);
    assert_ne!(run("5", "a")["eigenvalues"], run("6", "c")["eigenvalues"]);
}

#[test]
fn custom_sweep_and_replot() {
    let dir = workspace();
    let cfg = format!("{SMALL}\n[[sweep.axis]]\nname = \"delta_lambda_nm\"\nvalues = [-0.3, 0.0, 0.3]\n");
    std::fs::write(dir.path().join("sweep.toml"), cfg).unwrap();
    let v = stdout_json(&pnn(
        dir.path(),
        &["--config", "sweep.toml", "--out", "s", "--repetitions", "2", "--workers", "2", "sweep", "custom", "--experiment", "probe"],
    ));
    assert_eq!(v["rows"], 6);
    assert_eq!(v["failed_points"], 0);
    let plot = std::fs::read_to_string(dir.path().join("s/plot_custom.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("delta_lambda_nm,D,seed"));

    let r = stdout_json(&pnn(
        dir.path(),
        &["--out", "s", "emit-plotdata", "--axes", "delta_lambda_nm", "--metrics", "D", "--name", "again"],
    ));
    assert!(r["plot"].as_str().unwrap().ends_with("plot_again.csv"));
}

#[test]
fn recipe_sweep_writes_manifest() {
    let dir = workspace();
    stdout_json(&pnn(dir.path(), &["--config", "small.toml", "--out", "f", "sweep", "fig5"]));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("f/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["figure"], "Fig5");
    assert_eq!(manifest["metrics"][0]["name"], "k_min");
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let dir = workspace();
    std::fs::write(dir.path().join("bad.toml"), "[reservoir]\n\npower_ratio = -1\n").unwrap();
    let e = stderr_json(&pnn(dir.path(), &["--config", "bad.toml", "train"]));
    assert_eq!(e["error"]["kind"], "config");
    assert_eq!(e["error"]["field"], "power_ratio");
    assert_eq!(e["error"]["line"], 3);

    let e = stderr_json(&pnn(dir.path(), &["sweep", "fig9"]));
    assert_eq!(e["error"]["kind"], "unknown_recipe");

    let e = stderr_json(&pnn(dir.path(), &["--config", "missing.toml", "probe"]));
    assert_eq!(e["error"]["kind"], "io");

    let e = stderr_json(&pnn(dir.path(), &["frobnicate"]));
    assert_eq!(e["error"]["kind"], "usage");
}

#[test]
fn empty_table_writes_nothing() {
    let dir = workspace();
    let header = "segment,point,repetition,seed,device_seed,bias_ratio,power_ratio,delta_lambda_nm,ring_fraction,\
                  n_bits,noise_scale,vcsel_on,nmse,ser,c_total,c_node_mean,k_min,D,error\n";
    std::fs::write(dir.path().join("empty.csv"), header).unwrap();
    let e = stderr_json(&pnn(dir.path(), &["--out", "o", "emit-plotdata", "--table", "empty.csv", "--axes", "power_ratio"]));
    assert_eq!(e["error"]["kind"], "empty_selection");
    assert!(!dir.path().join("o").exists());
}
