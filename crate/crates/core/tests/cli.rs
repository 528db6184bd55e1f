use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use msclstm::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use msclstm::data::synthetic::{generate, SyntheticConfig};
use msclstm::data::{write_csv, NormStats};
use msclstm::metrics::EvalReport;
use msclstm::model::ModelParams;

fn msclstm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msclstm")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_csv(dir: &Path, rows: usize, seed: u64) -> PathBuf {
    let mut cfg = SyntheticConfig::source(seed);
    cfg.rows = rows;
    let path = dir.join(format!("kpi{seed}.csv"));
    write_csv(&generate(&cfg).unwrap(), &path).unwrap();
    path
}

#[test]
fn eda_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_csv(dir.path(), 100, 1);
    let out = dir.path().join("eda");
    let o = msclstm(&["eda", s(&csv), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["class_distribution.json", "correlation.csv", "correlation.svg", "run_manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn missing_label_column_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_csv(dir.path(), 50, 2);
    let schema = dir.path().join("schema.json");
    fs::write(&schema, r#"{"label_column": "Anomalous"}"#).unwrap();
    let o = msclstm(&["eda", s(&csv), "--schema", s(&schema), "--out", s(&dir.path().join("e"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Anomalous"), "{err}");
    assert_eq!(err.trim().lines().count(), 1, "{err}");
}

#[test]
fn train_evaluate_predict_inspect_round() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_csv(dir.path(), 200, 3);
    let run = dir.path().join("run");
    let o = msclstm(&["train", s(&csv), "--epochs", "2", "--seed", "5", "--out", s(&run)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.ckpt", "epoch_log.csv", "curves.svg", "report.json", "run_manifest.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let log = fs::read_to_string(run.join("epoch_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert!(log.starts_with("epoch,train_loss,train_acc,val_loss,val_acc\n"));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["train"]["epochs"], 2);
    assert_eq!(manifest["config"]["train"]["seed"], 5);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    // Evaluating the held-out split reproduces the training report.
    let eval = dir.path().join("eval");
    let o = msclstm(&[
        "evaluate",
        s(&run.join("model.ckpt")),
        s(&csv),
        "--validation-split",
        "--seed",
        "5",
        "--out",
        s(&eval),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let a: EvalReport = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    let b: EvalReport = serde_json::from_str(&fs::read_to_string(eval.join("report.json")).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Anomaly"));

    let pred = dir.path().join("pred");
    let o = msclstm(&["predict", s(&run.join("model.ckpt")), s(&csv), "--out", s(&pred)]);
    assert_eq!(o.status.code(), Some(0));
    let rows = fs::read_to_string(pred.join("predictions.csv")).unwrap();
    assert_eq!(rows.lines().next(), Some("probability,label"));
    assert_eq!(rows.lines().count(), 201);

    let o = msclstm(&["inspect", s(&run.join("model.ckpt")), "--out", s(&dir.path().join("i"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("parameters: 57545"));
}

#[test]
fn finetune_with_other_feature_count_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = Checkpoint::new(
        ModelParams::build(5, 1).unwrap(),
        NormStats::from_f32(&[0.0; 5], &[1.0; 5]).unwrap(),
        0,
    )
    .unwrap();
    let path = dir.path().join("five.ckpt");
    save_checkpoint(&ckpt, &path).unwrap();
    let csv = small_csv(dir.path(), 60, 4);
    let o = msclstm(&["finetune", s(&path), s(&csv), "--epochs", "1", "--out", s(&dir.path().join("f"))]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = msclstm(&["evaluate", s(&path), s(&csv), "--out", s(&dir.path().join("e"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn finetune_freeze_keeps_conv_branches() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_csv(dir.path(), 120, 6);
    let src = dir.path().join("src");
    assert_eq!(msclstm(&["train", s(&csv), "--epochs", "1", "--out", s(&src)]).status.code(), Some(0));
    let target = small_csv(dir.path(), 120, 7);
    let ft = dir.path().join("ft");
    let o = msclstm(&["finetune", s(&src.join("model.ckpt")), s(&target), "--epochs", "1", "--freeze-features", "--out", s(&ft)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let a = load_checkpoint(&src.join("model.ckpt")).unwrap();
    let b = load_checkpoint(&ft.join("model.ckpt")).unwrap();
    for layer in ["conv_a", "conv_b"] {
        assert_eq!(a.params.layer(layer), b.params.layer(layer));
    }
    assert_ne!(a.params.layer("dense_out"), b.params.layer("dense_out"));
}

#[test]
fn generate_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = msclstm(&["generate", "--domain", "target", "--rows", "300", "--seed", "3", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("target.csv")).unwrap();
    assert_eq!(text.lines().count(), 301);
    assert!(text.lines().next().unwrap().ends_with(",Unusual"));
}

#[test]
fn unreadable_checkpoint_exits_2_and_corrupt_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = msclstm(&["inspect", s(&dir.path().join("missing.ckpt")), "--out", s(&dir.path().join("i"))]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.ckpt");
    fs::write(&bad, b"MSCL\x02\x00\x00\x00").unwrap();
    let o = msclstm(&["inspect", s(&bad), "--out", s(&dir.path().join("i"))]);
    assert_eq!(o.status.code(), Some(4));
}
