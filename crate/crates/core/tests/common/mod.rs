//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curator::error::ClientError;
use curator::example_pool::{build_pool, ExamplePool, RelationNormalizer};
use curator::gen_clients::image::ImageGenerator;
use curator::gen_clients::text::ReplayTextGenerator;
use curator::geometry::BBox;
use curator::pipeline::config::PipelineConfig;
use curator::pipeline::Clients;
use curator::scene_graph::{validate_scene_graph, RawObject, RelationTriple, SceneGraph, SceneGraphDoc};
use curator::toy::world::{synthetic_annotations, RELATIONS};
use curator::toy::{ToyCaptioner, ToyImageGenerator, ToyJudge};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn bb(x: f64, y: f64, w: f64, h: f64) -> BBox {
    BBox::new(x, y, w, h).expect("valid test box")
}

pub fn raw(id: &str, category: &str, attribute: &str, color: Option<&str>, b: &BBox) -> RawObject {
    RawObject {
        id: id.into(),
        category: category.into(),
        attribute: attribute.into(),
        color: color.map(Into::into),
        bbox: Some(b.to_array().to_vec()),
    }
}

pub fn triple(s: &str, r: &str, o: &str) -> RelationTriple {
    RelationTriple { subject_id: s.into(), relation: r.into(), object_id: o.into() }
}

pub fn scene(objects: Vec<RawObject>, relations: Vec<RelationTriple>) -> SceneGraph {
    validate_scene_graph(SceneGraphDoc {
        id: Some("test".into()),
        objects,
        relations,
        caption: "A test scene.".into(),
        ..Default::default()
    })
    .expect("valid test scene")
}

pub const E2E_CATEGORIES: [&str; 5] = ["dog", "cat", "car", "frisbee", "tree"];

/// Pool with geometrically consistent examples for every ordered category
/// pair and toy relation.
pub fn synthetic_pool(categories: &[&str], per_key: usize, seed: u64) -> ExamplePool {
    let cats: Vec<String> = categories.iter().map(|c| c.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = synthetic_annotations(&cats, &RELATIONS, per_key, &mut rng);
    let (pool, report) = build_pool(docs.into_iter().map(Ok), RelationNormalizer::default());
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    pool
}

/// Fraction of grid cells, sampled at cell centers, covered by both boxes
/// over those covered by either. Axis-aligned boxes factor per axis.
pub fn raster_iou(a: &BBox, b: &BBox, cells: usize) -> f64 {
    let covered = |lo: f64, len: f64| -> Vec<bool> {
        (0..cells)
            .map(|i| {
                let c = (i as f64 + 0.5) / cells as f64;
                c >= lo && c < lo + len
            })
            .collect()
    };
    let (ax, ay) = (covered(a.x(), a.w()), covered(a.y(), a.h()));
    let (bx, by) = (covered(b.x(), b.w()), covered(b.y(), b.h()));
    let count = |v: &[bool]| v.iter().filter(|c| **c).count() as f64;
    let both = |p: &[bool], q: &[bool]| p.iter().zip(q).filter(|(x, y)| **x && **y).count() as f64;
    let inter = both(&ax, &bx) * both(&ay, &by);
    let union = count(&ax) * count(&ay) + count(&bx) * count(&by) - inter;
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Image generator wrapper that logs the scene id of every request.
pub struct Counting<G> {
    pub inner: G,
    pub requested: Mutex<Vec<String>>,
}

impl<G> Counting<G> {
    pub fn new(inner: G) -> Self {
        Self { inner, requested: Mutex::new(Vec::new()) }
    }
}

impl<G: ImageGenerator> ImageGenerator for Counting<G> {
    fn generate(&self, sg: &SceneGraph, seed: u64, w: u32, h: u32) -> Result<RgbImage, ClientError> {
        self.requested.lock().unwrap().push(sg.id().unwrap_or("").to_string());
        self.inner.generate(sg, seed, w, h)
    }

    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }
}

pub fn e2e_config(out: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::load(&fixture("e2e/config.json")).expect("fixture config");
    config.output_dir = out.to_path_buf();
    config
}

/// Replayed text generation with offline image, caption, and judge stages.
pub fn replay_clients(config: &PipelineConfig) -> Clients {
    Clients {
        text: Box::new(ReplayTextGenerator::load(&config.cassettes).expect("fixture cassette")),
        image: Box::new(ToyImageGenerator { defect_rate: config.toy_defect_rate }),
        captioner: Box::new(ToyCaptioner),
        judge: Box::new(ToyJudge),
    }
}

pub fn e2e_pool() -> ExamplePool {
    synthetic_pool(&E2E_CATEGORIES, 8, 7)
}
