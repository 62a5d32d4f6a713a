use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nalm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nalm"))
        .args(args)
        .env_remove("NALM_OUT_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = nalm(args);
    assert!(
        out.status.success(),
        "nalm {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn verify_grad_passes_for_every_kind() {
    let stdout = ok(&["verify-grad"]);
    assert_eq!(stdout.lines().count(), 7, "{stdout}");
    assert!(stdout.lines().all(|l| l.ends_with("ok")), "{stdout}");
    assert!(stdout.contains("closed form"));
}

#[test]
fn landscape_writes_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("nmru.csv");
    ok(&["landscape", "--kind", "nmru", "--res", "101", "--out", path(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("w1,w2,rmse"));
    assert_eq!(lines.count(), 101 * 101);

    let out = Command::new(env!("CARGO_BIN_EXE_nalm"))
        .args(["landscape", "--kind", "real-npu", "--res", "21"])
        .env("NALM_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("landscape-real-npu.csv").exists());
}

#[test]
fn train_from_preset_and_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let stdout = ok(&[
        "train",
        "--variant",
        "nmru",
        "--range",
        "U[10,20)",
        "--seed",
        "1",
        "--iterations",
        "3000",
        "--trace",
        path(&trace),
    ]);
    assert!(stdout.contains("status            completed"), "{stdout}");
    assert!(fs::read_to_string(&trace)
        .unwrap()
        .starts_with("iteration,train_loss,val_mse,extrap_mse,sparsity_error"));
    let record = fs::read_to_string(dir.path().join("train-nmru-seed1-record.json")).unwrap();
    assert!(record.contains("\"best_iteration\""));

    let config = repo_file("configs/nru-divide.toml");
    let stdout = ok(&[
        "train",
        "--config",
        path(&config),
        "--iterations",
        "3000",
        "--out-dir",
        path(dir.path()),
    ]);
    assert!(stdout.contains("success           true"), "{stdout}");
    assert!(dir.path().join("train-nru-seed0-trace.csv").exists());
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let args = [
        "sweep",
        "--preset",
        "no_redundancy",
        "--kinds",
        "nru",
        "--ranges",
        "U[1,2)",
        "--seeds",
        "3",
        "--iterations",
        "2000",
        "--out",
        path(&out),
    ];
    let stdout = ok(&args);
    assert!(stdout.contains("3 runs executed, 0 already present"), "{stdout}");
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 4);
    assert!(ok(&args).contains("0 runs executed, 3 already present"));

    let summary = dir.path().join("summary-copy.csv");
    let report = ok(&["report", path(&out), "--csv", path(&summary)]);
    assert!(report.contains("nru"), "{report}");
    assert_eq!(
        fs::read_to_string(&summary).unwrap(),
        fs::read_to_string(out.join("summary.csv")).unwrap()
    );
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_file("configs/easy-ranges.toml");
    let stdout = ok(&[
        "sweep",
        "--config",
        path(&config),
        "--seeds",
        "1",
        "--iterations",
        "1000",
        "--out",
        path(dir.path()),
    ]);
    assert!(stdout.contains("4 runs executed"), "{stdout}");
}

#[test]
fn thresholds_are_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["thresholds", "--samples", "2000", "--seed", "4", "--out", path(&a)]);
    ok(&["thresholds", "--samples", "2000", "--seed", "4", "--out", path(&b)]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().next(), Some("task,upper_bound,kind,threshold"));
    assert_eq!(text.lines().count(), 1 + 15 * 3);
}

#[test]
fn bad_invocations_fail() {
    assert_eq!(nalm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        nalm(&["train", "--config", "x.toml", "--variant", "nmru"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(nalm(&["landscape", "--kind", "nau"]).status.code(), Some(2));
    let missing = nalm(&["train", "--config", "/nonexistent/run.toml"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error:"));
}

#[test]
fn readme_examples_at_reduced_scale() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    ok(&[
        "train",
        "--preset",
        "redundancy",
        "--variant",
        "nmru",
        "--range",
        "U[-2,-1)",
        "--seed",
        "3",
        "--iterations",
        "500",
        "--eval-every",
        "100",
        "--out-dir",
        d,
    ]);
    let sweep_out = dir.path().join("sweep");
    let stdout = ok(&[
        "sweep",
        "--preset",
        "no_redundancy",
        "--kinds",
        "nru,nmru",
        "--ranges",
        "U[1,2)",
        "--ranges",
        "U[10,20)",
        "--seeds",
        "1",
        "--iterations",
        "1000",
        "--out",
        path(&sweep_out),
    ]);
    assert!(stdout.contains("4 runs executed"), "{stdout}");
    ok(&[
        "landscape",
        "--kind",
        "real-npu",
        "--res",
        "41",
        "--out",
        path(&dir.path().join("real-npu.csv")),
    ]);
    ok(&["verify-grad", "--trials", "10"]);
    ok(&[
        "thresholds",
        "--precision",
        "f32",
        "--samples",
        "500",
        "--out",
        path(&dir.path().join("thresholds.csv")),
    ]);
}
