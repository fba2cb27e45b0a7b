//! Whole-pipeline runs on offline backends.

mod common;

use std::sync::Arc;

use image::RgbImage;

use curator::error::{ClientError, Error};
use curator::gen_clients::image::ImageGenerator;
use curator::gen_clients::Templates;
use curator::pipeline::config::PipelineConfig;
use curator::pipeline::manifest::{load_curated, read_manifest, write_manifest, DropReason, RunReport};
use curator::pipeline::{run, Clients, MANIFEST_FILE, RAW_MANIFEST_FILE, REPORT_FILE};
use curator::scene_graph::SceneGraph;

use common::{e2e_config, e2e_pool, replay_clients, Counting};

struct Broken;

impl ImageGenerator for Broken {
    fn generate(&self, _: &SceneGraph, _: u64, _: u32, _: u32) -> Result<RgbImage, ClientError> {
        Err(ClientError::Transport("503".into()))
    }

    fn backend_id(&self) -> &str {
        "broken"
    }
}

#[test]
fn replayed_run_accounts_for_every_list_and_image() {
    let dir = tempfile::tempdir().unwrap();
    let config = e2e_config(dir.path());
    let out = run(&config, &e2e_pool(), &replay_clients(&config), &Templates::default()).unwrap();
    let r = &out.report;
    let c = &r.counts;
    assert_eq!(c.object_lists, 20);
    let lost = |d: DropReason| r.drops.get(&d).copied().unwrap_or(0);
    assert_eq!(c.scene_graphs + lost(DropReason::ParseFail) + lost(DropReason::LayoutInvalid), 20);
    assert_eq!(c.scene_graphs, c.layout_survivors + lost(DropReason::BelowTauL));
    assert_eq!(c.images_requested, 4 * c.layout_survivors);
    assert_eq!(c.images_scored, c.images_generated);
    assert_eq!(c.retained + lost(DropReason::BelowTauI), c.images_scored);
    assert_eq!(c.retained, out.curated.len());
    assert_eq!(r.clis_l_histogram.total(), c.scene_graphs);
    assert_eq!(r.clis_i_histogram.total(), c.images_scored);
    assert!(out.curated.iter().all(|s| s.clis_l >= 70.0 && s.clis_i >= 80.0));

    assert_eq!(read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap(), out.curated);
    assert_eq!(read_manifest(&dir.path().join(RAW_MANIFEST_FILE)).unwrap(), out.raw);
    assert_eq!(RunReport::load(&dir.path().join(REPORT_FILE)).unwrap(), out.report);
    for s in &out.curated {
        assert!(dir.path().join(&s.image).is_file());
    }
}

#[test]
fn reject_all_layout_threshold_requests_no_images() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig { tau_l: 101.0, ..e2e_config(dir.path()) };
    let counting = Arc::new(Counting::new(curator::toy::ToyImageGenerator::default()));
    let clients = Clients { image: Box::new(Arc::clone(&counting)), ..replay_clients(&config) };
    let out = run(&config, &e2e_pool(), &clients, &Templates::default()).unwrap();
    assert_eq!(out.report.counts.images_requested, 0);
    assert!(counting.requested.lock().unwrap().is_empty());
    assert!(out.curated.is_empty());
}

#[test]
fn image_client_failures_are_counted_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let config = e2e_config(dir.path());
    let clients = Clients { image: Box::new(Broken), ..replay_clients(&config) };
    let out = run(&config, &e2e_pool(), &clients, &Templates::default()).unwrap();
    let c = &out.report.counts;
    assert!(c.layout_survivors > 0);
    assert_eq!(c.images_generated, 0);
    assert_eq!(out.report.drops.get(&DropReason::ClientError), Some(&c.images_requested));
    assert!(out.curated.is_empty());
}

#[test]
fn empty_category_table_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = e2e_config(dir.path());
    config.sampling.categories.clear();
    let err = run(&config, &e2e_pool(), &Clients::toy(&config), &Templates::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn curated_loader_rejects_records_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig { tau_l: 0.0, tau_i: 0.0, ..e2e_config(dir.path()) };
    let out = run(&config, &e2e_pool(), &replay_clients(&config), &Templates::default()).unwrap();
    let path = dir.path().join(MANIFEST_FILE);
    assert!(load_curated(&path, 0.0, 0.0).is_ok());
    let lowest = out.curated.iter().map(|s| s.clis_i).fold(f64::INFINITY, f64::min);
    assert!(lowest < 100.0);
    assert!(load_curated(&path, 0.0, lowest + 1e-6).is_err());

    let broken = dir.path().join("bad.jsonl");
    let mut records = out.curated.clone();
    records[0].clis_l = -1.0;
    write_manifest(&broken, &records).unwrap();
    assert!(load_curated(&broken, 0.0, 0.0).is_err());
}

#[test]
fn key_value_config_matches_json() {
    let kv = "\
# thresholds
tau_l = 60
tau_i = 75
images_per_graph = 2
sampling.strategy = uniform
sampling.lists = 5
sampling.categories = [{\"category\": \"dog\", \"weight\": 1}]
output_dir = runs/a
";
    let a = PipelineConfig::from_text(kv).unwrap();
    let b = PipelineConfig::from_text(
        r#"{"tau_l": 60, "tau_i": 75, "images_per_graph": 2, "output_dir": "runs/a",
            "sampling": {"strategy": "uniform", "lists": 5, "categories": [{"category": "dog", "weight": 1}]}}"#,
    )
    .unwrap();
    assert_eq!(a, b);
    assert!(PipelineConfig::from_text("tau_l = 150").is_err());
    assert!(PipelineConfig::from_text("no equals sign").is_err());
    assert!(PipelineConfig::from_text("unknown_key = 1").is_err());
}
