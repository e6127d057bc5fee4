use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rema_core::video_io::{load_clip, write_clip, ClipFormat, ClipShape, VideoClip};

fn rema(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rema"))
        .args(args)
        .env_remove("REMA_SEED")
        .output()
        .expect("spawn rema")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not one JSON document ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Deterministic textured clip with an optional `.meta.json` label.
fn clip_file(dir: &Path, name: &str, shape: ClipShape, phase: f32, label: Option<&str>) -> PathBuf {
    let data = (0..shape.len())
        .map(|i| ((i as f32 * 0.37 + phase).sin() * 0.5 + 0.5).clamp(0.0, 1.0))
        .collect();
    let clip = VideoClip::new(name, None, shape, data).unwrap();
    let path = dir.join(format!("{name}.rvt"));
    write_clip(&clip, &path, ClipFormat::RawTensor).unwrap();
    if let Some(label) = label {
        fs::write(path.with_extension("meta.json"), format!("{{\"label\":\"{label}\"}}")).unwrap();
    }
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn augment_happy_path_writes_clip_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let shape = ClipShape::new(20, 32, 32);
    let a = clip_file(tmp.path(), "a", shape, 0.0, Some("walk"));
    let b = clip_file(tmp.path(), "b", shape, 1.0, Some("walk"));
    let out = tmp.path().join("out/aug.rvt");
    let res = rema(&["augment", "--clip-a", s(&a), "--clip-b", s(&b), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.exists());
    assert!(out.with_extension("meta.json").exists());
    let meta = json(&res);
    assert_eq!(meta["realized_coverage"], 0.25);
    assert_eq!(meta["T"], 16);
    assert_eq!(load_clip(&out, ClipFormat::RawTensor).unwrap().shape(), ClipShape::new(16, 32, 32));
}

#[test]
fn augment_zero_ratio_is_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let shape = ClipShape::new(4, 8, 8);
    let a = clip_file(tmp.path(), "a", shape, 0.0, None);
    let b = clip_file(tmp.path(), "b", shape, 2.0, None);
    let out = tmp.path().join("aug.rvt");
    let res = rema(&[
        "augment", "--clip-a", s(&a), "--clip-b", s(&b), "--out", s(&out), "--ratio", "0", "--frames", "4", "--block",
        "4",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(json(&res)["realized_coverage"], 0.0);
    let got = load_clip(&out, ClipFormat::RawTensor).unwrap();
    let src = load_clip(&a, ClipFormat::RawTensor).unwrap();
    assert_eq!(got.data(), src.data());
}

#[test]
fn augment_label_mismatch_names_both() {
    let tmp = tempfile::tempdir().unwrap();
    let shape = ClipShape::new(4, 8, 8);
    let a = clip_file(tmp.path(), "a", shape, 0.0, Some("walk"));
    let b = clip_file(tmp.path(), "b", shape, 1.0, Some("swim"));
    let res = rema(&["augment", "--clip-a", s(&a), "--clip-b", s(&b), "--out", s(&tmp.path().join("o.rvt"))]);
    assert_eq!(code(&res), 2);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("walk") && err.contains("swim"), "{err}");
}

#[test]
fn augment_frames_output_and_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let shape = ClipShape::new(4, 8, 8);
    let a = clip_file(tmp.path(), "a", shape, 0.0, None);
    let b = clip_file(tmp.path(), "b", shape, 1.0, None);
    let out = tmp.path().join("frames_out");
    let res = rema(&[
        "augment", "--clip-a", s(&a), "--clip-b", s(&b), "--out", s(&out), "--format", "frames", "--frames", "4",
        "--block", "4",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 4);

    let missing = tmp.path().join("nope.rvt");
    let res = rema(&["augment", "--clip-a", s(&missing), "--clip-b", s(&b), "--out", s(&tmp.path().join("x.rvt"))]);
    assert_eq!(code(&res), 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&rema(&["augment", "--bogus"])), 2);
    assert_eq!(code(&rema(&["bench", "--ratio", "1.5"])), 2);
    assert_eq!(code(&rema(&["frobnicate"])), 2);
}

#[test]
fn help_flags_defaults() {
    let res = rema(&["augment", "--help"]);
    assert_eq!(code(&res), 0);
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("not tuned or published values"));
    assert!(text.contains("[default: 0.3]"));
}

fn write_manifest(dir: &Path, rows: &[(&str, &str)]) -> PathBuf {
    let shape = ClipShape::new(6, 16, 16);
    let mut lines = String::new();
    for (n, (id, label)) in rows.iter().enumerate() {
        clip_file(dir, id, shape, n as f32, None);
        lines.push_str(&format!("{{\"id\":\"{id}\",\"path\":\"{id}.rvt\",\"label\":\"{label}\"}}\n"));
    }
    let path = dir.join("manifest.jsonl");
    fs::write(&path, lines).unwrap();
    path
}

fn digests(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn batch_minimal_and_singleton() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &[("c0", "walk"), ("c1", "walk")]);
    let res = rema(&["batch", "--manifest", s(&m), "--out", s(&tmp.path().join("o")), "--block", "4", "--frames", "4"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rep = json(&res);
    assert_eq!((rep["augmented"].as_u64(), rep["skipped"].as_u64(), rep["failed"].as_u64()), (Some(2), Some(0), Some(0)));

    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &[("solo", "jump")]);
    let res = rema(&["batch", "--manifest", s(&m), "--out", s(&tmp.path().join("o")), "--block", "4"]);
    assert_eq!(code(&res), 0);
    assert_eq!(json(&res)["skipped"], 1);
}

#[test]
fn batch_worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(
        tmp.path(),
        &[("a0", "x"), ("a1", "x"), ("a2", "x"), ("b0", "y"), ("b1", "y"), ("b2", "y"), ("b3", "y")],
    );
    let mut outs = Vec::new();
    for workers in ["1", "8"] {
        let dir = tmp.path().join(format!("w{workers}"));
        let res = rema(&["batch", "--manifest", s(&m), "--out", s(&dir), "--workers", workers, "--block", "4"]);
        assert_eq!(code(&res), 0);
        outs.push(digests(&dir));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn batch_failures_and_missing_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &[("a0", "x"), ("a1", "x")]);
    fs::write(tmp.path().join("a1.rvt"), b"garbage").unwrap();
    let res = rema(&["batch", "--manifest", s(&m), "--out", s(&tmp.path().join("o")), "--block", "4"]);
    assert_eq!(code(&res), 1);
    assert!(json(&res)["failed"].as_u64().unwrap() >= 1);

    let res = rema(&["batch", "--manifest", s(&tmp.path().join("none.jsonl")), "--out", s(&tmp.path().join("o2"))]);
    assert_eq!(code(&res), 3);
}

#[test]
fn seed_env_overrides_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let shape = ClipShape::new(4, 16, 16);
    let a = clip_file(tmp.path(), "a", shape, 0.0, None);
    let b = clip_file(tmp.path(), "b", shape, 1.0, None);
    let run = |out: &str, seed: &str, env: Option<&str>| {
        let out = tmp.path().join(out);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rema"));
        cmd.args(["augment", "--clip-a", s(&a), "--clip-b", s(&b), "--out", s(&out)])
            .args(["--frames", "4", "--block", "2", "--ratio", "0.5", "--seed", seed])
            .env_remove("REMA_SEED")
            .stdout(Stdio::null());
        if let Some(v) = env {
            cmd.env("REMA_SEED", v);
        }
        assert!(cmd.status().unwrap().success());
        fs::read(out).unwrap()
    };
    let seven = run("s7.rvt", "7", None);
    assert_eq!(run("s7_again.rvt", "7", None), seven);
    assert_ne!(run("s8.rvt", "8", None), seven);
    assert_eq!(run("env7.rvt", "8", Some("7")), seven);
}

#[test]
fn inspect_writes_four_pngs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = clip_file(tmp.path(), "a", ClipShape::new(4, 24, 20), 0.0, None);
    let out = tmp.path().join("viz");
    let res = rema(&["inspect", "--clip", s(&a), "--out", s(&out), "--block", "8"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let pngs: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(pngs.len(), 4);
    for p in pngs {
        let img = image::open(&p).unwrap();
        assert_eq!((img.width(), img.height()), (20, 24));
    }
}

#[test]
fn inspect_static_clip_is_black_motion_white_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let clip = VideoClip::filled("still", None, ClipShape::new(3, 8, 8), 0.4).unwrap();
    let path = tmp.path().join("still.rvt");
    write_clip(&clip, &path, ClipFormat::RawTensor).unwrap();
    let out = tmp.path().join("viz");
    assert_eq!(code(&rema(&["inspect", "--clip", s(&path), "--out", s(&out), "--block", "4"])), 0);
    let motion = image::open(out.join("motion_map.png")).unwrap().to_luma8();
    assert!(motion.pixels().all(|p| p.0[0] == 0));
    let weights = image::open(out.join("selection_weights.png")).unwrap().to_luma8();
    assert!(weights.pixels().all(|p| p.0[0] == 255));
}

#[test]
fn inspect_single_frame_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let a = clip_file(tmp.path(), "a", ClipShape::new(1, 8, 8), 0.0, None);
    let res = rema(&["inspect", "--clip", s(&a), "--out", s(&tmp.path().join("viz")), "--block", "4"]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("T >= 2"));
}

#[test]
fn validate_tube_passes_and_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("reports");
    let res = rema(&["validate", "--suite", "tube", "--trials", "1000", "--report", s(&dir)]);
    assert_eq!(code(&res), 0);
    assert_eq!(json(&res)["passed"], true);
    let csv = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(csv.starts_with("check,r,b0,strategy,statistic,threshold,pass"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn validate_sampling_reports_deviation() {
    let res = rema(&["validate", "--suite", "sampling", "--trials", "200000"]);
    assert_eq!(code(&res), 0);
    let doc = json(&res);
    for rep in doc["reports"].as_array().unwrap() {
        assert!(rep["details"]["max_abs_deviation"].is_number());
    }
}

#[test]
fn validate_detects_broken_tube_builder() {
    let res = rema(&["validate", "--suite", "all", "--trials", "200", "--fault-tube-builder", "B"]);
    assert_eq!(code(&res), 1);
    let doc = json(&res);
    let tube_c = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["check"] == "tube_consistency" && r["strategy"] == "C")
        .unwrap()
        .clone();
    assert_eq!(tube_c["passed"], false);
}

#[test]
fn validate_malformed_grid_exits_2() {
    assert_eq!(code(&rema(&["validate", "--suite", "coverage", "--grid", "r=0.3;b0="])), 2);
    assert_eq!(code(&rema(&["validate", "--suite", "coverage", "--grid", "q=1"])), 2);
}

#[test]
fn bench_minimal_and_tiny() {
    let res = rema(&["bench", "--clips", "1", "--size", "32", "--frames", "4"]);
    assert_eq!(code(&res), 0);
    let rep = json(&res);
    assert_eq!(rep["clips"], 1);
    for stage in ["resample", "motion", "pooling", "sampling", "mixing"] {
        assert!(rep["stages"][stage].as_f64().unwrap() >= 0.0);
    }
    let res = rema(&["bench", "--clips", "2", "--size", "8", "--frames", "2"]);
    assert_eq!(code(&res), 0);
    assert_eq!(json(&res)["block"], 8);
}
