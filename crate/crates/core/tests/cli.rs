use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn noier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noier")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = noier(args);
    assert!(
        out.status.success(),
        "noier {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Synthetic benchmark in a fresh directory; returns the directory and config path.
fn synth(seed: u64) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench");
    ok(&["synth", "--out", bench.to_str().unwrap(), "--seed", &seed.to_string()]);
    let cfg = bench.join("experiment.toml");
    assert!(cfg.exists());
    (dir, cfg)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FAST: &str = "train.max_epochs=3";

#[test]
fn synth_prepare_train_eval() {
    let (_dir, cfg) = synth(1);
    let run = cfg.parent().unwrap().join("run");
    ok(&["prepare", "-c", s(&cfg)]);
    assert!(run.join("prepared.json").exists() && run.join("vocab.json").exists());
    ok(&["train", "-c", s(&cfg), "--set", FAST]);
    assert!(run.join("model.json").exists() && run.join("train_epochs.csv").exists());
    let stdout = ok(&["eval", "-c", s(&cfg), "--set", FAST]);
    assert!(stdout.lines().next().unwrap().contains("auroc"));
    for f in ["eval_report.json", "detector.json", "scores_ind.csv", "scores_ood.csv", "histogram.svg"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("eval_report.json")).unwrap()).unwrap();
    assert!(report["auroc"].as_f64().unwrap() > 50.0);
    let scores = std::fs::read_to_string(run.join("scores_ood.csv")).unwrap();
    assert_eq!(scores.lines().next().unwrap(), "sentence_id,score,verdict");
    assert_eq!(scores.lines().count(), 501);
}

#[test]
fn eval_without_ood_reports_f1_only() {
    let (_dir, cfg) = synth(2);
    ok(&["train", "-c", s(&cfg), "--set", FAST, "--set", "output_dir=noood"]);
    ok(&["eval", "-c", s(&cfg), "--set", "output_dir=noood", "--set", "data.test_ood=", "--set", FAST]);
    let run = cfg.parent().unwrap().join("noood");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("eval_report.json")).unwrap()).unwrap();
    assert!(report["f1_macro"].as_f64().unwrap() > 50.0);
    assert!(report["auroc"].is_null());
    assert!(!run.join("scores_ood.csv").exists());
}

#[test]
fn missing_file_exits_2_and_names_path() {
    let (_dir, cfg) = synth(3);
    let out = noier(&["train", "-c", s(&cfg), "--set", "data.train=nowhere.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));
}

#[test]
fn negative_alpha_exits_2_without_output() {
    let (_dir, cfg) = synth(4);
    let out = noier(&["train", "-c", s(&cfg), "--set", "train.alpha=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!cfg.parent().unwrap().join("run").exists());
}

#[test]
fn unknown_argument_exits_2() {
    assert_eq!(noier(&["train", "--bogus"]).status.code(), Some(2));
}

#[test]
fn hpsearch_single_point() {
    let (_dir, cfg) = synth(5);
    let stdout = ok(&[
        "hpsearch",
        "-c",
        s(&cfg),
        "--set",
        FAST,
        "--set",
        "grid.p_del_grid=[0.1]",
        "--set",
        "grid.p_repl_grid=[0.15]",
        "--set",
        "grid.r_perm_grid=[0.8]",
        "--set",
        "grid.repeats=2",
    ]);
    assert!(stdout.contains("selected p_del=0.1 p_repl=0.15 r_perm=0.8"));
    let csv = std::fs::read_to_string(cfg.parent().unwrap().join("run/hpsearch.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("row,point,p_del"));
    assert_eq!(rows.iter().filter(|r| r.starts_with("run,")).count(), 2);
    assert_eq!(rows.iter().filter(|r| r.starts_with("mean,")).count(), 1);
}

#[test]
fn noise_preview_is_seeded() {
    let (_dir, cfg) = synth(6);
    let a = ok(&["noise-preview", "-c", s(&cfg), "-n", "3"]);
    let b = ok(&["noise-preview", "-c", s(&cfg), "-n", "3"]);
    assert_eq!(a, b);
    let labels: Vec<&str> = a
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split('|').next().unwrap().trim())
        .collect();
    assert_eq!(labels.len(), 12);
    assert_eq!(&labels[..4], ["Original", "Del", "Permute", "Repl"]);
}

#[test]
fn prepare_is_reproducible() {
    let (_dir, cfg) = synth(7);
    let run = cfg.parent().unwrap().join("run");
    ok(&["prepare", "-c", s(&cfg)]);
    let first = std::fs::read(run.join("prepared.json")).unwrap();
    ok(&["prepare", "-c", s(&cfg)]);
    assert_eq!(first, std::fs::read(run.join("prepared.json")).unwrap());
}

#[test]
fn ttest_on_two_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "auroc\n90\n91\n92\n").unwrap();
    std::fs::write(&b, "auroc\n80\n82\n81\n").unwrap();
    let stdout = ok(&["ttest", s(&a), s(&b)]);
    assert!(stdout.starts_with("t = "), "{stdout}");
    let out = noier(&["ttest", s(&a), s(&b), "--column", "eer"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_with_checkpoint_into_fresh_directory() {
    let (_dir, cfg) = synth(8);
    ok(&["train", "-c", s(&cfg), "--set", FAST]);
    let model = cfg.parent().unwrap().join("run/model.json");
    ok(&["eval", "-c", s(&cfg), "--set", "output_dir=other", "--checkpoint", s(&model)]);
    let other = cfg.parent().unwrap().join("other");
    assert!(other.join("eval_report.json").exists());
    assert!(!other.join("model.json").exists());
}
