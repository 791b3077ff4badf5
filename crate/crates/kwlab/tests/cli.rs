//! The `kwlab` binary: registry listing, outputs, reruns and exit codes.

use kwlab::experiment::{exit_code, list_experiments, sha256_hex, Manifest, VerdictFile};
use kwlab::LabError;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwlab"))
        .args(args)
        .env_remove("KWLAB_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kwlab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const NAMES: [&str; 10] = [
    "torus-weyl",
    "torus-fuzzy-components",
    "sphere-jump-scaling",
    "zonal-meridian",
    "sojourn-detect",
    "epsilon-staircase",
    "tauberian-smoothing",
    "forbidden-decay",
    "biangle-solve",
    "clairaut-return",
];

#[test]
fn list_is_complete_and_stable() {
    let out = kwlab(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, NAMES);
    assert_eq!(text, String::from_utf8(kwlab(&["list"]).stdout).unwrap());
    for e in list_experiments() {
        assert!(!e.anchor.is_empty() && !e.description.is_empty());
        assert!(e.budget_seconds <= 300);
    }
}

#[test]
fn torus_weyl_defaults_write_the_calibration_row() {
    let dir = scratch("weyl");
    let out = kwlab(&["run", "--experiment", "torus-weyl", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("weyl_sum.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "lambda,value,main_term_pred,residual,rel_err");
    let verdicts: VerdictFile = serde_json::from_slice(&std::fs::read(dir.join("verdicts.json")).unwrap()).unwrap();
    assert_eq!(verdicts.schema_version, 1);
    assert!(verdicts.rows.iter().any(|r| r.claim.contains("C_{2,1}") && r.pass));
    let m = manifest(&dir);
    for f in &m.files {
        let bytes = std::fs::read(dir.join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256);
        assert_eq!(bytes.len() as u64, f.bytes);
    }
    assert!(m.files.iter().any(|f| f.path == "config.toml"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn zero_cutoff_gives_only_the_constant_mode() {
    let dir = scratch("zero");
    let out = kwlab(&["run", "--experiment", "torus-weyl", "--lambda-max", "0", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("weyl_sum.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let value: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(value, 1.0 / (2.0 * std::f64::consts::PI));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn deterministic_rerun_from_written_config_is_identical() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    let out = kwlab(&[
        "run", "--experiment", "sojourn-detect", "--lambda-max", "300", "--deterministic", "--out", a.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cfg = a.join("config.toml");
    let out = kwlab(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(out.status.success());
    let (ma, mb) = (manifest(&a), manifest(&b));
    // config.toml differs only in the output directory it records
    let data = |m: &Manifest| m.files.iter().filter(|f| f.path != "config.toml").cloned().collect::<Vec<_>>();
    assert_eq!(data(&ma), data(&mb));
    assert!(!data(&ma).is_empty());
    std::fs::remove_dir_all(&a).unwrap();
    std::fs::remove_dir_all(&b).unwrap();
}

#[test]
fn sojourn_output_marks_the_predicted_times() {
    let dir = scratch("sojourn");
    let out = kwlab(&["run", "--experiment", "sojourn-detect", "--lambda-max", "300", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("sojourn.csv")).unwrap();
    let predicted: Vec<f64> = csv
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("predicted"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    for t in [0.0, 1.6 * std::f64::consts::PI, -1.6 * std::f64::consts::PI] {
        assert!(predicted.iter().any(|p| (p - t).abs() < 1e-9), "missing {t}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(kwlab(&["run", "--experiment", "no-such-thing"]).status.code(), Some(2));
    assert_eq!(kwlab(&["run", "--experiment", "torus-weyl", "--c", "2"]).status.code(), Some(2));
    assert_eq!(kwlab(&["run", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(kwlab(&["frobnicate"]).status.code(), Some(2));

    let dir = scratch("strict");
    let d = dir.to_str().unwrap();
    // the eps-staircase first-jump row fails on the great circle
    assert_eq!(kwlab(&["run", "--experiment", "epsilon-staircase", "--out", d]).status.code(), Some(0));
    assert_eq!(kwlab(&["run", "--experiment", "epsilon-staircase", "--strict", "--out", d]).status.code(), Some(1));
    assert_eq!(kwlab(&["run", "--experiment", "forbidden-decay", "--strict", "--out", d]).status.code(), Some(0));
    std::fs::remove_dir_all(&dir).unwrap();

    assert_eq!(exit_code(&LabError::Tolerance("x".into())), 3);
    assert_eq!(exit_code(&LabError::Numeric("x".into())), 3);
    assert_eq!(exit_code(&LabError::UnknownExperiment("x".into())), 2);
}

#[test]
fn cache_directory_is_used_and_left_intact() {
    let cache = scratch("cache");
    let out_dir = scratch("cache-out");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_kwlab"))
            .args(["run", "--experiment", "torus-weyl", "--lambda-max", "200", "--out", out_dir.to_str().unwrap()])
            .env("KWLAB_CACHE_DIR", &cache)
            .output()
            .unwrap()
    };
    assert!(run().status.success());
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    let before = std::fs::read(&entries[0]).unwrap();
    let first = std::fs::read(out_dir.join("weyl_sum.csv")).unwrap();
    assert!(run().status.success());
    assert_eq!(std::fs::read(&entries[0]).unwrap(), before);
    assert_eq!(std::fs::read(out_dir.join("weyl_sum.csv")).unwrap(), first);
    std::fs::remove_dir_all(&cache).unwrap();
    std::fs::remove_dir_all(&out_dir).unwrap();
}
