//! End-to-end checks of the `curator` binary.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use common::{bb, raw, scene, triple};

fn curator(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curator")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = curator(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{args:?} stdout is not one JSON document: {e}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_scene(dir: &Path) -> PathBuf {
    let sg = scene(
        vec![
            raw("o1", "dog", "a brown dog", Some("brown"), &bb(0.1, 0.1, 0.5, 0.5)),
            raw("o2", "frisbee", "a red frisbee", Some("red"), &bb(0.7, 0.2, 0.1, 0.1)),
        ],
        vec![triple("o1", "left of", "o2")],
    );
    let path = dir.join("scene.json");
    std::fs::write(&path, serde_json::to_string(&sg).unwrap()).unwrap();
    path
}

fn synth_pool(dir: &Path) -> PathBuf {
    let pool = dir.join("pool.json");
    ok_json(&["--json", "pool", "synth", "--out", s(&pool), "--categories", "dog,cat,frisbee,car", "--per-key", "3"]);
    pool
}

fn toy_run(dir: &Path, pool: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("run-{seed}"));
    let report = ok_json(&[
        "--json", "--seed", seed, "generate", "--pool", s(pool), "--out", s(&out), "--lists", "6",
        "--categories", "dog,cat,frisbee,car", "--tau-l", "0", "--tau-i", "0", "--images-per-graph", "2",
    ]);
    assert_eq!(report["counts"]["object_lists"], 6);
    out
}

#[test]
fn score_layout_reports_scene_and_triples() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth_pool(dir.path());
    let scene = write_scene(dir.path());
    let v = ok_json(&["--json", "score", "layout", "--scene", s(&scene), "--pool", s(&pool)]);
    let score = v["scene_score"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&score));
    assert_eq!(v["triples"].as_array().unwrap().len(), 1);
}

#[test]
fn pool_stats_and_score_image() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth_pool(dir.path());
    let stats = ok_json(&["--json", "pool", "stats", "--pool", s(&pool), "--top", "2"]);
    assert!(stats["examples"].as_u64().unwrap() > 0);
    assert_eq!(stats["top"].as_array().unwrap().len(), 2);

    let scene = write_scene(dir.path());
    let png = dir.path().join("blank.png");
    image::RgbImage::new(16, 16).save(&png).unwrap();
    let v = ok_json(&["--json", "score", "image", "--scene", s(&scene), "--image", s(&png)]);
    assert!((0.0..=100.0).contains(&v["score"].as_f64().unwrap()));
}

#[test]
fn generate_filter_export_report() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth_pool(dir.path());
    let run = toy_run(dir.path(), &pool, "9");
    for f in ["manifest.jsonl", "raw_manifest.jsonl", "report.json"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }

    let raw = std::fs::read_to_string(run.join("raw_manifest.jsonl")).unwrap();
    let filtered = dir.path().join("all.jsonl");
    let v = ok_json(&[
        "--json", "filter", "--manifest", s(&run.join("raw_manifest.jsonl")), "--tau-l", "0", "--tau-i", "0",
        "--out", s(&filtered),
    ]);
    assert_eq!(v["input"], v["retained"]);
    assert_eq!(std::fs::read_to_string(&filtered).unwrap().lines().count(), raw.lines().count());

    let strict = run.join("strict.jsonl");
    let v = ok_json(&[
        "--json", "filter", "--manifest", s(&run.join("raw_manifest.jsonl")), "--tau-l", "101", "--tau-i", "0",
        "--out", s(&strict),
    ]);
    assert_eq!(v["retained"], 0);

    let coco = dir.path().join("coco.json");
    let v = ok_json(&["--json", "export", "coco", "--manifest", s(&filtered), "--out", s(&coco)]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&coco).unwrap()).unwrap();
    assert_eq!(doc["images"].as_array().unwrap().len() as u64, v["images"].as_u64().unwrap());

    let qa = dir.path().join("qa.jsonl");
    let v = ok_json(&["--json", "export", "qa", "--manifest", s(&run.join("manifest.jsonl")), "--out", s(&qa)]);
    assert_eq!(std::fs::read_to_string(&qa).unwrap().lines().count() as u64, v["pairs"].as_u64().unwrap());

    let r = ok_json(&["--json", "report", "--run", s(&run)]);
    assert_eq!(r["counts"]["object_lists"], 6);
    let human = curator(&["report", "--run", s(&run)]);
    assert!(String::from_utf8_lossy(&human.stdout).contains("retained"));
}

#[test]
fn same_seed_same_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth_pool(dir.path());
    let a = toy_run(dir.path(), &pool, "5");
    let b_dir = dir.path().join("again");
    std::fs::create_dir(&b_dir).unwrap();
    let b = toy_run(&b_dir, &pool, "5");
    let read = |p: PathBuf| std::fs::read(p.join("raw_manifest.jsonl")).unwrap();
    assert_eq!(read(a), read(b));
}

#[test]
fn replay_backend_runs_from_cassette() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e");
    let config = dir.path().join("config.json");
    std::fs::copy(fixture.join("config.json"), &config).unwrap();
    std::fs::copy(fixture.join("cassette.jsonl"), dir.path().join("cassette.jsonl")).unwrap();
    let pool = dir.path().join("pool.json");
    ok_json(&[
        "--json", "--seed", "7", "pool", "synth", "--out", s(&pool), "--categories", "dog,cat,car,frisbee,tree",
        "--per-key", "8",
    ]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let v = ok_json(&[
            "--json", "--backend", "replay", "--config", s(&config), "generate", "--pool", s(&pool), "--out", s(&out),
        ]);
        assert_eq!(v["counts"]["object_lists"], 20);
        assert_eq!(v["drops"].get("client-error"), None, "cassette misses: {v}");
        std::fs::read(out.join("manifest.jsonl")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn render_draws_boxes_in_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path());
    let svg = dir.path().join("s.svg");
    let v = ok_json(&[
        "--json", "render", "--scene", s(&scene), "--out", s(&svg), "--width", "1000", "--height", "1000", "--arrows",
    ]);
    assert_eq!(v["objects"], 2);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<rect").count() - text.matches("<rect width=\"100%\"").count(), 2);
    assert_eq!(text.matches("<text").count(), 2);
    assert!(text.contains("x=\"100\" y=\"100\" width=\"500\" height=\"500\""), "{text}");
    assert!(text.contains("<line"));
}

#[test]
fn exit_codes_distinguish_user_and_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = curator(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(1));

    let missing = dir.path().join("missing.jsonl");
    let out = curator(&["pool", "build", "--annotations", s(&missing), "--out", s(&dir.path().join("p.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));

    let bad_tau = curator(&[
        "filter", "--manifest", s(&missing), "--tau-l", "150", "--tau-i", "0", "--out", s(&dir.path().join("o")),
    ]);
    assert_eq!(bad_tau.status.code(), Some(1));

    assert_eq!(curator(&["--help"]).status.code(), Some(0));
}
