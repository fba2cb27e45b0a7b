//! End-to-end curation: sample object lists, generate scene graphs, filter
//! layouts, generate images for survivors only, filter images.

pub mod config;
pub mod manifest;
pub mod sampling;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clis_i::{clis_i, CaptionClient, HttpCaptionClient, HttpJudgeClient, JudgeClient};
use crate::clis_l::clis_l_scene;
use crate::error::{Error, Result};
use crate::example_pool::ExamplePool;
use crate::gen_clients::http::HttpSettings;
use crate::gen_clients::image::{generate_images, HttpImageGenerator, ImageGenerator};
use crate::gen_clients::text::{HttpTextGenerator, ReplayTextGenerator, TextGenerator};
use crate::gen_clients::{generate_scene_graph, SceneGenFailure, Templates};
use crate::scene_graph::ObjectList;
use crate::seeds::derive_seed;
use crate::toy::{ToyCaptioner, ToyImageGenerator, ToyJudge, ToyTextGenerator};

use self::config::PipelineConfig;
use self::manifest::{
    write_manifest, DropReason, Histogram, ItemSummary, Provenance, RunReport, SampleRecord, StageCounts,
};
use self::sampling::{sample_object_lists, CategoryTable};

pub const IMAGES_DIR: &str = "images";
pub const SCENE_GRAPHS_DIR: &str = "scene_graphs";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const RAW_MANIFEST_FILE: &str = "raw_manifest.jsonl";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// HTTP endpoints for every stage.
    Live,
    /// Recorded text cassettes with offline image, caption, and judge stages.
    Replay,
    /// Fully offline generators.
    #[default]
    Toy,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(Backend::Live),
            "replay" => Ok(Backend::Replay),
            "toy" => Ok(Backend::Toy),
            other => Err(Error::Argument(format!("unknown backend {other:?}"))),
        }
    }
}

pub struct Clients {
    pub text: Box<dyn TextGenerator>,
    pub image: Box<dyn ImageGenerator>,
    pub captioner: Box<dyn CaptionClient>,
    pub judge: Box<dyn JudgeClient>,
}

fn endpoint(settings: &Option<HttpSettings>, stage: &str) -> Result<HttpSettings> {
    settings
        .clone()
        .ok_or_else(|| Error::Config(format!("live backend needs endpoints.{stage}")))
}

impl Clients {
    pub fn toy(config: &PipelineConfig) -> Self {
        Self {
            text: Box::new(ToyTextGenerator::default()),
            image: Box::new(ToyImageGenerator { defect_rate: config.toy_defect_rate }),
            captioner: Box::new(ToyCaptioner),
            judge: Box::new(ToyJudge),
        }
    }

    pub fn from_config(backend: Backend, config: &PipelineConfig) -> Result<Self> {
        match backend {
            Backend::Toy => Ok(Self::toy(config)),
            Backend::Replay => {
                if config.cassettes.is_empty() {
                    return Err(Error::Config("replay backend needs at least one cassette".into()));
                }
                Ok(Self { text: Box::new(ReplayTextGenerator::load(&config.cassettes)?), ..Self::toy(config) })
            }
            Backend::Live => {
                let e = &config.endpoints;
                Ok(Self {
                    text: Box::new(HttpTextGenerator::new(endpoint(&e.text, "text")?)),
                    image: Box::new(HttpImageGenerator::new(endpoint(&e.image, "image")?)),
                    captioner: Box::new(HttpCaptionClient::new(endpoint(&e.caption, "caption")?)),
                    judge: Box::new(HttpJudgeClient::new(endpoint(&e.judge, "judge")?)),
                })
            }
        }
    }
}

/// The configured category table: the `category_table` file if set, else
/// the inline entries.
pub fn category_table(config: &PipelineConfig) -> Result<CategoryTable> {
    match &config.sampling.category_table {
        Some(path) => CategoryTable::load(path),
        None if config.sampling.categories.is_empty() => {
            Err(Error::Config("category table is empty; set sampling.categories or sampling.category_table".into()))
        }
        None => CategoryTable::new(config.sampling.categories.clone()),
    }
}

pub fn item_id(index: usize) -> String {
    format!("item-{index:05}")
}

pub fn image_seed(root: u64, item: &str) -> u64 {
    derive_seed(root, &format!("{item}/images"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub curated: Vec<SampleRecord>,
    /// Every scored image, retained or not, for later re-thresholding.
    pub raw: Vec<SampleRecord>,
}

struct ItemOutcome {
    summary: ItemSummary,
    records: Vec<SampleRecord>,
    /// Images that failed generation or scoring.
    image_failures: usize,
    scene_generated: bool,
}

/// Samples object lists from the configured table and runs them.
pub fn run(config: &PipelineConfig, pool: &ExamplePool, clients: &Clients, templates: &Templates) -> Result<RunOutput> {
    config.validate()?;
    let table = category_table(config)?;
    let s = &config.sampling;
    let lists = sample_object_lists(
        &table,
        s.strategy,
        s.lists,
        (s.min_len, s.max_len),
        derive_seed(config.seed, "object-lists"),
    )?;
    run_lists(config, &lists, pool, clients, templates)
}

/// Runs the given object lists and writes images, scene graphs, manifests,
/// and the report under `config.output_dir`.
pub fn run_lists(
    config: &PipelineConfig,
    lists: &[ObjectList],
    pool: &ExamplePool,
    clients: &Clients,
    templates: &Templates,
) -> Result<RunOutput> {
    config.validate()?;
    let started = unix_now();
    let out = &config.output_dir;
    for dir in [out.join(IMAGES_DIR), out.join(SCENE_GRAPHS_DIR)] {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(config.concurrency)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<ItemOutcome> = workers.install(|| {
        lists
            .par_iter()
            .enumerate()
            .map(|(i, list)| process_item(config, pool, clients, templates, i, list))
            .collect::<Result<_>>()
    })?;

    let mut counts = StageCounts { object_lists: lists.len(), ..StageCounts::default() };
    let mut drops: BTreeMap<DropReason, usize> = BTreeMap::new();
    let mut clis_l_histogram = Histogram::default();
    let mut clis_i_histogram = Histogram::default();
    let mut raw = Vec::new();
    let mut items = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let s = &o.summary;
        counts.scene_graphs += usize::from(o.scene_generated);
        if let Some(score) = s.clis_l {
            clis_l_histogram.add(score);
        }
        counts.images_requested += s.images_requested;
        counts.images_generated += s.images_generated;
        counts.images_scored += s.clis_i.len();
        counts.retained += s.retained;
        s.clis_i.iter().for_each(|v| clis_i_histogram.add(*v));
        if s.images_requested > 0 {
            counts.layout_survivors += 1;
            *drops.entry(DropReason::BelowTauI).or_default() += s.clis_i.len() - s.retained;
            if o.image_failures > 0 {
                *drops.entry(DropReason::ClientError).or_default() += o.image_failures;
            }
        } else if let Some(reason) = s.drop {
            *drops.entry(reason).or_default() += 1;
        }
        raw.extend(o.records);
        items.push(o.summary);
    }
    drops.retain(|_, n| *n > 0);
    raw.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let curated: Vec<SampleRecord> =
        raw.iter().filter(|r| r.passes(config.tau_l, config.tau_i)).cloned().collect();

    write_manifest(&out.join(MANIFEST_FILE), &curated)?;
    write_manifest(&out.join(RAW_MANIFEST_FILE), &raw)?;
    let report = RunReport {
        tau_l: config.tau_l,
        tau_i: config.tau_i,
        images_per_graph: config.images_per_graph,
        seed: config.seed,
        counts,
        drops,
        clis_l_histogram,
        clis_i_histogram,
        items,
        started_at_unix: started,
        finished_at_unix: unix_now(),
    };
    report.save(&out.join(REPORT_FILE))?;
    Ok(RunOutput { report, curated, raw })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs every stage for one object list. Only output-directory IO errors
/// propagate; everything else becomes a drop reason.
fn process_item(
    config: &PipelineConfig,
    pool: &ExamplePool,
    clients: &Clients,
    templates: &Templates,
    index: usize,
    list: &ObjectList,
) -> Result<ItemOutcome> {
    let id = item_id(index);
    let item_seed = derive_seed(config.seed, &id);
    let mut summary = ItemSummary {
        item_id: id.clone(),
        objects: list.entries().to_vec(),
        clis_l: None,
        drop: None,
        detail: None,
        images_requested: 0,
        images_generated: 0,
        clis_i: Vec::new(),
        retained: 0,
    };
    let outcome = |summary: ItemSummary| ItemOutcome {
        summary,
        records: Vec::new(),
        image_failures: 0,
        scene_generated: false,
    };

    let generated = match generate_scene_graph(
        &*clients.text,
        templates,
        list,
        &config.decode,
        &config.retry,
        item_seed,
        &id,
    ) {
        Ok(g) => g,
        Err(e) => {
            log::warn!("{id}: scene generation failed: {e}");
            summary.drop = Some(match e {
                SceneGenFailure::Client(_) => DropReason::ClientError,
                SceneGenFailure::Parse(_) => DropReason::ParseFail,
                SceneGenFailure::Layout(_) => DropReason::LayoutInvalid,
            });
            summary.detail = Some(e.to_string());
            return Ok(outcome(summary));
        }
    };
    let sg = generated.scene;
    let sg_path = config.output_dir.join(SCENE_GRAPHS_DIR).join(format!("{id}.json"));
    write_json(&sg_path, &sg)?;

    let layout = match clis_l_scene(&sg, pool, &config.clis_l) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{id}: layout scoring failed: {e}");
            summary.drop = Some(DropReason::LayoutInvalid);
            summary.detail = Some(e.to_string());
            return Ok(ItemOutcome { scene_generated: true, ..outcome(summary) });
        }
    };
    summary.clis_l = Some(layout.scene_score);
    if layout.scene_score < config.tau_l {
        summary.drop = Some(DropReason::BelowTauL);
        return Ok(ItemOutcome { scene_generated: true, ..outcome(summary) });
    }

    let n = config.images_per_graph;
    let first_seed = image_seed(config.seed, &id);
    summary.images_requested = n as usize;
    let batch = generate_images(&*clients.image, &sg, n, first_seed, config.image_size, &config.retry)?;
    summary.images_generated = batch.images.len();
    let mut image_failures = batch.failures.len();
    for f in &batch.failures {
        log::warn!("{id}: image seed {} failed: {}", f.seed, f.error);
    }
    let mut records = Vec::new();
    for img in &batch.images {
        let k = img.source_seed.wrapping_sub(first_seed) as u32;
        let sample_id = format!("{id}_{k}");
        let rel = Path::new(IMAGES_DIR).join(format!("{sample_id}.png"));
        let abs = config.output_dir.join(&rel);
        img.pixels
            .save(&abs)
            .map_err(|source| Error::Image { path: abs.clone(), source })?;
        let score = match clis_i(img, &sg, &*clients.captioner, &*clients.judge, &config.judge_weights, &config.retry) {
            Ok(s) => s.score,
            Err(e) => {
                log::warn!("{sample_id}: image scoring failed: {e}");
                image_failures += 1;
                continue;
            }
        };
        summary.clis_i.push(score);
        if score >= config.tau_i {
            summary.retained += 1;
        }
        records.push(SampleRecord {
            sample_id,
            item_id: id.clone(),
            image_index: k,
            image: rel,
            scene_graph: sg.clone(),
            clis_l: layout.scene_score,
            clis_i: score,
            provenance: Provenance {
                root_seed: config.seed,
                item_seed,
                image_seed: img.source_seed,
                generation_round: generated.round,
                text_backend: clients.text.backend_id().to_string(),
                image_backend: clients.image.backend_id().to_string(),
                caption_backend: clients.captioner.backend_id().to_string(),
                judge_backend: clients.judge.backend_id().to_string(),
            },
        });
    }
    if summary.retained == 0 {
        summary.drop = Some(if summary.clis_i.is_empty() { DropReason::ClientError } else { DropReason::BelowTauI });
    }
    Ok(ItemOutcome { summary, records, image_failures, scene_generated: true })
}
