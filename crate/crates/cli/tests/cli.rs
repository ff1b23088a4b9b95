use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn vokit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vokit")).current_dir(dir).args(args).output().expect("spawn vokit")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = vokit(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let mut args = vec!["synth", "--gt", "gt.txt", "--pred", "pred.txt", "--out", "synth.json"];
    args.extend_from_slice(extra);
    ok(dir, &args);
    (dir.join("gt.txt"), dir.join("pred.txt"))
}

fn evaluate_json(dir: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["evaluate", "--gt", "gt.txt", "--pred", "pred.txt", "--format", "json"];
    args.extend_from_slice(extra);
    serde_json::from_str(&ok(dir, &args)).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn identical_prediction_scores_zero() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--shape", "circle", "--frames", "400"]);
    let out = ok(dir.path(), &["evaluate", "--gt", "gt.txt", "--pred", "gt.txt", "--gt", "gt.txt", "--pred", "pred.txt", "--format", "json"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["sequences"].as_array().unwrap().len(), 2);
    let first = &r["sequences"][0]["report"];
    assert_eq!(num(&first["t_rel"]), 0.0);
    assert_eq!(num(&first["r_rel"]), 0.0);
    assert_eq!(num(&first["se"]), 0.0);
    // noise-free synthetic prediction: zero up to round-off
    let second = &r["sequences"][1]["report"];
    assert!(num(&second["t_rel"]) < 1e-9 && num(&second["r_rel"]) < 1e-9 && num(&second["se"]) < 1e-12);
}

#[test]
fn zigzag_scale_error_and_alignment() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--shape", "zigzag", "--zigzag-schedule", "scale-only"]);
    let raw = evaluate_json(dir.path(), &["--lengths", "1,2"]);
    assert!((num(&raw["average"]["se"]) - 0.33).abs() < 0.01, "{}", raw["average"]);
    let aligned = evaluate_json(dir.path(), &["--lengths", "1,2", "--align", "scale-per-frame"]);
    assert!(num(&aligned["average"]["se"]) < 1e-12);
    assert_eq!(aligned["config"]["align"], "scale-per-frame");
    assert_eq!(aligned["sequences"][0]["substituted_frames"], Value::Array(vec![]));
}

#[test]
fn uniform_scale_noise_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--shape", "straight", "--frames", "1001", "--scale-noise", "0.1"]);
    let r = evaluate_json(dir.path(), &[]);
    let se = num(&r["average"]["se"]);
    assert!((se - 1.0 / 11.0).abs() < 1e-6, "se={se}");
    assert!((num(&r["average"]["t_rel"]) - 10.0).abs() < 1e-6);
}

#[test]
fn report_formats() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--shape", "circle", "--scale-noise", "0.05"]);
    let csv = ok(dir.path(), &["evaluate", "--gt", "gt.txt", "--pred", "pred.txt", "--lengths", "10,20", "--format", "csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "sequence,gt,pred,frames,subsequences,t_rel,r_rel,se");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("gt,gt.txt,pred.txt,101,"));
    assert!(lines[2].starts_with("average,,,"));

    let human = ok(dir.path(), &["evaluate", "--gt", "gt.txt", "--pred", "pred.txt", "--lengths", "10,20"]);
    assert!(human.contains("t_rel (%)") && human.contains("average"));
    assert!(!human.contains("elapsed"));

    ok(dir.path(), &["evaluate", "--gt", "gt.txt", "--pred", "pred.txt", "--format", "json", "--out", "report.json", "--timing"]);
    let r: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(num(&r["elapsed_seconds"]) >= 0.0);
    // 100 m of path: no subsequence fits the default lengths
    assert_eq!(r["average"]["t_rel"], Value::Null);
    assert_eq!(r["sequences"][0]["gt"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn evaluation_is_reproducible() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--shape", "random-walk", "--frames", "300", "--rotation-jitter", "0.01", "--seed", "9"]);
    let a = ok(dir.path(), &["evaluate", "--gt", "gt.txt", "--pred", "pred.txt", "--format", "json"]);
    let b = ok(dir.path(), &["evaluate", "--gt", "gt.txt", "--pred", "pred.txt", "--format", "json"]);
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(vokit(d, &["evaluate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(vokit(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(vokit(d, &["--version"]).status.code(), Some(0));
    assert_eq!(vokit(d, &["evaluate", "--gt", "missing.txt", "--pred", "missing.txt"]).status.code(), Some(2));

    fs::write(d.join("bad.txt"), "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 1 0 1 0 0 0 0 1 x\n").unwrap();
    let out = vokit(d, &["evaluate", "--gt", "bad.txt", "--pred", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    synth(d, &[]);
    assert_eq!(vokit(d, &["evaluate", "--gt", "gt.txt", "--pred", "pred.txt", "--lengths", "5,1"]).status.code(), Some(1));
    assert_eq!(vokit(d, &["evaluate", "--gt", "gt.txt", "--gt", "gt.txt", "--pred", "pred.txt"]).status.code(), Some(1));

    // a matrix far from SO(3) is malformed input
    fs::write(d.join("skew.txt"), "1 0 0 0 0 1 0 0 0 0 1 0\n2 0 0 1 0 1 0 0 0 0 1 0\n").unwrap();
    assert_eq!(vokit(d, &["evaluate", "--gt", "skew.txt", "--pred", "skew.txt"]).status.code(), Some(2));

    // concentration beyond the supported range
    write_predictions(&d.join("sharp.txt"), [2e6, 0.0, 0.0, 0.0, 2e6, 0.0, 0.0, 0.0, 2e6], 1);
    let out = vokit(d, &["filter", "--pred", "sharp.txt", "--kept", "k.jsonl", "--rejected", "r.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!d.join("k.jsonl").exists() && !d.join("r.jsonl").exists());
}

#[test]
fn failed_run_leaves_no_output() {
    let dir = TempDir::new().unwrap();
    let out = vokit(dir.path(), &["evaluate", "--gt", "missing.txt", "--pred", "missing.txt", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("r.json").exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

fn write_predictions(path: &Path, psi: [f64; 9], count: usize) {
    let psi: Vec<String> = psi.iter().map(|x| x.to_string()).collect();
    let mut text = String::new();
    for k in 0..count {
        text.push_str(&format!("{:06} 1 0 0 0 0 1 0 0 0 0 1 1 {}\n", k + 1, psi.join(" ")));
    }
    fs::write(path, text).unwrap();
}

fn manifest(path: &Path) -> (Value, Vec<Value>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(|l| serde_json::from_str::<Value>(l).unwrap());
    let header = lines.next().unwrap()["header"].clone();
    (header, lines.collect())
}

#[test]
fn filter_thresholds() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_predictions(&d.join("flat.txt"), [0.0; 9], 4);
    ok(d, &["filter", "--pred", "flat.txt", "--kept", "k.jsonl", "--rejected", "r.jsonl"]);
    let (kh, kept) = manifest(&d.join("k.jsonl"));
    let (_, rejected) = manifest(&d.join("r.jsonl"));
    assert!(kept.is_empty());
    assert_eq!(kh["counts"]["total"], 0);
    assert_eq!(rejected.len(), 4);
    // uniform distribution on SO(3) with unit Haar mass has zero entropy
    for e in &rejected {
        assert!(num(&e["entropy"]).abs() < 1e-9);
        assert_eq!(e["selected"], false);
    }

    ok(d, &["filter", "--pred", "flat.txt", "--tau", "1e9", "--kept", "k.jsonl", "--rejected", "r.jsonl"]);
    assert_eq!(manifest(&d.join("k.jsonl")).1.len(), 4);
    assert!(manifest(&d.join("r.jsonl")).1.is_empty());
}

#[test]
fn filter_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--shape", "random-walk", "--frames", "41", "--concentration", "5", "--seed", "4"]);
    for method in ["quadrature", "monte-carlo"] {
        let args = ["filter", "--pred", "pred.txt", "--method", method, "--samples", "20000", "--seed", "7", "--tau", "-1"];
        ok(d, &[&args[..], &["--kept", "a.jsonl", "--rejected", "ar.jsonl"]].concat());
        ok(d, &[&args[..], &["--kept", "b.jsonl", "--rejected", "br.jsonl"]].concat());
        assert_eq!(fs::read(d.join("a.jsonl")).unwrap(), fs::read(d.join("b.jsonl")).unwrap());
        assert_eq!(fs::read(d.join("ar.jsonl")).unwrap(), fs::read(d.join("br.jsonl")).unwrap());
        let (h, kept) = manifest(&d.join("a.jsonl"));
        assert_eq!(kept.len() + manifest(&d.join("ar.jsonl")).1.len(), 40);
        assert_eq!(h["filter"]["tau_u"], -1.0);
    }
}

#[test]
fn filter_rejects_pose_files() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &[]);
    let out = vokit(dir.path(), &["filter", "--pred", "gt.txt", "--kept", "k", "--rejected", "r"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mix_counts_and_passthrough() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    // 4 poses give 3 labeled relative poses
    synth(d, &["--frames", "4"]);
    write_predictions(&d.join("p.txt"), [40.0, 0.0, 0.0, 0.0, 40.0, 0.0, 0.0, 0.0, 40.0], 2);
    ok(d, &["filter", "--pred", "p.txt", "--tau", "1e9", "--kept", "k.jsonl", "--rejected", "r.jsonl"]);
    let stdout = ok(d, &["mix", "--labeled", "gt.txt", "--pseudo", "k.jsonl", "--out", "m.jsonl"]);
    assert!(stdout.contains("3 labeled + 2 pseudo = 5"), "{stdout}");
    let (h, entries) = manifest(&d.join("m.jsonl"));
    assert_eq!(entries.len(), 5);
    assert_eq!(h["kind"], "mixed");
    assert_eq!((h["counts"]["labeled"].clone(), h["counts"]["pseudo"].clone()), (Value::from(3), Value::from(2)));
    assert_eq!(entries[0]["id"], "labeled/000001");
    assert_eq!(entries[4]["id"], "pseudo/000002");

    // nothing passes the filter: the mix is the labeled set alone
    ok(d, &["filter", "--pred", "p.txt", "--tau", "-1e9", "--kept", "none.jsonl", "--rejected", "all.jsonl"]);
    ok(d, &["mix", "--labeled", "gt.txt", "--pseudo", "none.jsonl", "--out", "m2.jsonl"]);
    let (h, entries) = manifest(&d.join("m2.jsonl"));
    assert_eq!(entries.len(), 3);
    assert_eq!(h["counts"]["pseudo"], 0);
    assert!(entries.iter().all(|e| e["source"] == "labeled"));

    // only labeled manifests or pose files are accepted on the labeled side
    let out = vokit(d, &["mix", "--labeled", "m2.jsonl", "--pseudo", "k.jsonl", "--out", "m3.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("m3.jsonl").exists());
}

#[test]
fn synth_echoes_settings() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["synth", "--shape", "circle", "--frames", "12", "--gt", "g.txt", "--pred", "p.txt"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["spec"]["frame_count"], 12);
    assert_eq!(fs::read_to_string(dir.path().join("g.txt")).unwrap().lines().count(), 12);
    assert_eq!(fs::read_to_string(dir.path().join("p.txt")).unwrap().lines().count(), 11);
    let bad = vokit(dir.path(), &["synth", "--frames", "1", "--gt", "g.txt", "--pred", "p.txt"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn plot_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--shape", "zigzag", "--zigzag-schedule", "turn-and-scale"]);
    ok(d, &["plot", "--gt", "gt.txt", "--pred", "pred.txt", "--pred", "gt.txt", "--out", "a.svg"]);
    ok(d, &["plot", "--gt", "gt.txt", "--pred", "pred.txt", "--pred", "gt.txt", "--out", "b.svg"]);
    let a = fs::read_to_string(d.join("a.svg")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.svg")).unwrap());
    assert_eq!(a.matches("<polyline").count(), 3);
    assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
}
