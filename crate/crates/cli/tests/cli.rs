//! End-to-end CLI behavior: exit codes, output layout, and bit-exact
//! determinism of repeated runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gcn-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_small_spec(path: &Path, h: f64, seed: u64) {
    let spec = format!(
        r#"{{
  "num_classes": 4, "nodes_per_class": 40, "avg_degree": 6.0,
  "homophily_target": {h}, "feature_dim": 8,
  "center_scale": 1.0, "noise_sigma": 1.0, "seed": {seed},
  "split": {{"train": 16, "val": 32, "test": 64}}
}}"#
    );
    fs::write(path, spec).unwrap();
}

/// Recursively collect (relative path, bytes) for every file under a root.
fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let entry = entry.unwrap();
            if entry.file_type().unwrap().is_dir() {
                stack.push(entry.path());
            } else {
                let rel = entry
                    .path()
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                files.push((rel, fs::read(entry.path()).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn usage_errors_exit_1_runtime_errors_exit_2() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["train", "--data", "/definitely/missing", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_config_is_a_runtime_error_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(&[
        "generate",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.json"), "stderr: {stderr}");
}

#[test]
fn generate_then_analyze_reports_pure_homophily() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write_small_spec(&spec, 1.0, 11);
    let data = dir.path().join("data");
    let out = run(&[
        "generate",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["meta.json", "edges.tsv", "labels.csv", "features.bin", "masks.csv"] {
        assert!(data.join(file).exists(), "{file} missing");
    }

    let out = run(&["analyze", "--data", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("node homophily: 1.000"), "stdout: {stdout}");
}

#[test]
fn generate_is_bit_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write_small_spec(&spec, 0.4, 9);
    for name in ["a", "b"] {
        let out = run(&[
            "generate",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            dir.path().join(name).to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(snapshot(&dir.path().join("a")), snapshot(&dir.path().join("b")));
}

#[test]
fn train_is_bit_deterministic_and_zero_epochs_scores_near_chance() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write_small_spec(&spec, 0.6, 5);
    let data = dir.path().join("data");
    assert_eq!(
        run(&["generate", "--spec", spec.to_str().unwrap(), "--out", data.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );

    let common = [
        "train",
        "--data",
        data.to_str().unwrap(),
        "--epochs",
        "15",
        "--hidden",
        "8",
        "--seed",
        "21",
    ];
    for name in ["r1", "r2"] {
        let out = bin()
            .args(common)
            .args(["--out", dir.path().join(name).to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(snapshot(&dir.path().join("r1")), snapshot(&dir.path().join("r2")));

    // Degenerate run: untrained predictor lands near chance (1/4 here).
    let out = bin()
        .args([
            "train",
            "--data",
            data.to_str().unwrap(),
            "--epochs",
            "0",
            "--hidden",
            "8",
            "--seed",
            "3",
            "--out",
            dir.path().join("zero").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("zero/summary.json")).unwrap(),
    )
    .unwrap();
    let acc = summary["final_test_acc"].as_f64().unwrap();
    assert!((acc - 0.25).abs() < 0.2, "untrained accuracy {acc}");
    let log = fs::read_to_string(dir.path().join("zero/train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1, "only the header for 0 epochs");
}

#[test]
fn sweep_writes_aggregate_with_one_row_per_cell_and_plot_renders() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    fs::write(
        &config,
        r#"{
  "homophily_values": [0.3, 0.7],
  "base": {"num_classes": 3, "nodes_per_class": 30, "avg_degree": 6.0,
           "homophily_target": 0.5, "feature_dim": 6,
           "center_scale": 1.0, "noise_sigma": 1.0, "seed": 0},
  "train": {"epochs": 10, "hidden": 6, "seed": 1},
  "split": {"train": 15, "val": 20, "test": 40},
  "seeds": [0, 1, 2]
}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("sweep_results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3, "header plus 6 cells");
    assert!(csv.starts_with("h,seed,realized_homophily,train_acc,val_acc,test_acc,inclass_mean,across_mean,gap"));

    let figs = dir.path().join("figs");
    let out = run(&[
        "plot",
        "--results",
        out_dir.to_str().unwrap(),
        "--out",
        figs.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(figs.join("accuracy_vs_epoch.svg").exists());
    assert!(figs.join("similarity_vs_homophily.svg").exists());
    assert!(figs.join("confusion_h0.3.svg").exists());
    assert!(figs.join("confusion_h0.7.svg").exists());
    let svg = fs::read_to_string(figs.join("accuracy_vs_epoch.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}
