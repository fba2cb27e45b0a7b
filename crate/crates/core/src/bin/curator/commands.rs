use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use curator::clis_i::{clis_i, CaptionClient, GeneratedImage, HttpCaptionClient, HttpJudgeClient, JudgeClient, JudgeWeights};
use curator::clis_l::{clis_l_scene, Aggregation, ClisLConfig, ClisLWeights};
use curator::error::Error;
use curator::example_pool::{build_pool, read_documents, ExamplePool, RelationNormalizer};
use curator::export::coco::{export_coco, validate_coco, write_coco};
use curator::export::qa::{export_qa, write_qa_jsonl};
use curator::export::svg::render_svg;
use curator::gen_clients::text::{RecordingTextGenerator, TextGenerator};
use curator::gen_clients::Templates;
use curator::pipeline::config::{check_threshold, PipelineConfig};
use curator::pipeline::manifest::{filter_records, read_manifest, write_manifest, RunReport};
use curator::pipeline::sampling::CategoryEntry;
use curator::pipeline::{self, Backend, Clients, REPORT_FILE};
use curator::scene_graph::SceneGraph;
use curator::seeds::derive_seed;
use curator::toy::world::{synthetic_annotations, RELATIONS};
use curator::toy::{ToyCaptioner, ToyJudge};

use crate::args::{BackendArg, Cli, Command, ExportCommand, LayoutScoring, PoolCommand, ScoreCommand};
use crate::UsageError;

pub fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let ctx = Ctx { config_path: g.config.clone(), seed: g.seed, backend: g.backend, json: g.json };
    match &cli.command {
        Command::Pool(PoolCommand::Build { annotations, out, synonyms }) => {
            pool_build(&ctx, annotations, out, synonyms.as_deref())
        }
        Command::Pool(PoolCommand::Stats { pool, top }) => pool_stats(&ctx, pool, *top),
        Command::Pool(PoolCommand::Synth { out, categories, per_key, annotations_out }) => {
            pool_synth(&ctx, out, categories, *per_key, annotations_out.as_deref())
        }
        Command::Score(ScoreCommand::Layout { scene, pool, scoring }) => score_layout(&ctx, scene, pool, scoring),
        Command::Score(ScoreCommand::Image { scene, image, judge_weights }) => {
            score_image(&ctx, scene, image, judge_weights.as_deref())
        }
        Command::Generate(a) => generate(&ctx, a),
        Command::Filter(a) => filter(&ctx, &a.manifest, a.tau_l, a.tau_i, &a.out),
        Command::Export(ExportCommand::Coco { manifest, out }) => export_coco_cmd(&ctx, manifest, out),
        Command::Export(ExportCommand::Qa { manifest, out }) => export_qa_cmd(&ctx, manifest, out),
        Command::Render(a) => {
            let sg = load_scene(&a.scene)?;
            if a.width == 0 || a.height == 0 {
                return Err(UsageError("canvas size must be non-zero".into()).into());
            }
            let svg = render_svg(&sg, a.width, a.height, a.arrows);
            std::fs::write(&a.out, svg).map_err(|e| Error::io(&a.out, e))?;
            ctx.emit(&serde_json::json!({"svg": a.out, "objects": sg.objects().len()}), || {
                println!("wrote {} ({} objects)", a.out.display(), sg.objects().len())
            })
        }
        Command::Report(a) => report(&ctx, &a.run),
    }
}

struct Ctx {
    config_path: Option<PathBuf>,
    seed: Option<u64>,
    backend: BackendArg,
    json: bool,
}

impl Ctx {
    fn config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config_path {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }

    fn seed(&self) -> Result<u64> {
        Ok(match self.seed {
            Some(s) => s,
            None => self.config()?.seed,
        })
    }

    fn backend(&self) -> Backend {
        match self.backend {
            BackendArg::Live => Backend::Live,
            BackendArg::Replay => Backend::Replay,
            BackendArg::Toy => Backend::Toy,
        }
    }

    fn emit<T: Serialize>(&self, value: &T, human: impl FnOnce()) -> Result<()> {
        if self.json {
            println!("{}", serde_json::to_string_pretty(value)?);
        } else {
            human();
        }
        Ok(())
    }
}

fn load_scene(path: &Path) -> Result<SceneGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text).map_err(|e| Error::json(path, e))?)
}

fn load_pool(path: &Path) -> Result<ExamplePool> {
    Ok(ExamplePool::load(path, RelationNormalizer::default())?)
}

fn pool_build(ctx: &Ctx, annotations: &[PathBuf], out: &Path, synonyms: Option<&Path>) -> Result<()> {
    let normalizer = match synonyms {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let map: std::collections::BTreeMap<String, String> =
                serde_json::from_str(&text).map_err(|e| Error::json(p, e))?;
            RelationNormalizer::with_synonyms(map)
        }
        None => RelationNormalizer::default(),
    };
    let mut docs = Vec::new();
    for path in annotations {
        docs.extend(read_documents(path)?);
    }
    let (pool, report) = build_pool(docs, normalizer);
    pool.save(out)?;
    for e in &report.errors {
        log::warn!("document {} skipped: {}", e.index, e.message);
    }
    ctx.emit(&report, || {
        println!("documents  {}", report.documents);
        println!("accepted   {}", report.accepted);
        println!("examples   {}", report.examples);
        println!("rejected   {}", report.errors.len());
        println!("keys       {}", pool.distinct_keys());
        println!("wrote {}", out.display());
    })
}

#[derive(Serialize)]
struct PoolStats {
    examples: usize,
    keys: usize,
    top: Vec<KeyCount>,
}

#[derive(Serialize)]
struct KeyCount {
    subject: String,
    relation: String,
    object: String,
    count: usize,
}

fn pool_stats(ctx: &Ctx, path: &Path, top: usize) -> Result<()> {
    let pool = load_pool(path)?;
    let stats = PoolStats {
        examples: pool.size(),
        keys: pool.distinct_keys(),
        top: pool
            .histogram(top)
            .into_iter()
            .map(|(k, count)| KeyCount { subject: k.subject, relation: k.relation, object: k.object, count })
            .collect(),
    };
    ctx.emit(&stats, || {
        println!("examples {}  keys {}", stats.examples, stats.keys);
        println!("{:>6}  key", "count");
        for k in &stats.top {
            println!("{:>6}  ({}, {}, {})", k.count, k.subject, k.relation, k.object);
        }
    })
}

fn pool_synth(ctx: &Ctx, out: &Path, categories: &[String], per_key: usize, docs_out: Option<&Path>) -> Result<()> {
    if per_key == 0 || categories.iter().any(|c| c.trim().is_empty()) {
        return Err(UsageError("--per-key must be >= 1 and categories non-empty".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed()?, "pool-synth"));
    let docs = synthetic_annotations(categories, &RELATIONS, per_key, &mut rng);
    if let Some(p) = docs_out {
        let lines: Vec<String> = docs.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
        std::fs::write(p, lines.join("\n") + "\n").map_err(|e| Error::io(p, e))?;
    }
    let (pool, report) = build_pool(docs.into_iter().map(Ok), RelationNormalizer::default());
    pool.save(out)?;
    ctx.emit(&report, || {
        println!("synthetic pool: {} examples over {} keys", pool.size(), pool.distinct_keys());
        println!("wrote {}", out.display());
    })
}

fn layout_config(base: &ClisLConfig, s: &LayoutScoring) -> Result<ClisLConfig> {
    let mut c = *base;
    if let Some(w) = &s.weights {
        c.weights = ClisLWeights::parse(w)?;
    }
    if let Some(a) = &s.aggregation {
        c.aggregation = a.parse::<Aggregation>()?;
    }
    if let Some(f) = s.fallback {
        c.fallback = f;
    }
    c.validate()?;
    Ok(c)
}

fn score_layout(ctx: &Ctx, scene: &Path, pool: &Path, scoring: &LayoutScoring) -> Result<()> {
    let config = layout_config(&ctx.config()?.clis_l, scoring)?;
    let sg = load_scene(scene)?;
    let pool = load_pool(pool)?;
    let score = clis_l_scene(&sg, &pool, &config)?;
    ctx.emit(&score, || {
        println!("CLIS-L {:.3}", score.scene_score);
        println!("{:<24} {:>7} {:>7} {:>7} {:>8}  matched", "triple", "size", "dist", "dir", "combined");
        for t in &score.triples {
            let s = &t.score;
            println!(
                "{:<24} {:>7.3} {:>7.3} {:>7.3} {:>8.3}  {}",
                format!("{} {} {}", t.subject, t.relation, t.object),
                s.size,
                s.dist,
                s.dir,
                s.combined,
                s.matched
            );
        }
        for w in &score.warnings {
            println!("warning: {w}");
        }
    })
}

fn parse_judge_weights(text: &str) -> Result<JudgeWeights> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| UsageError(format!("--judge-weights {text:?}: {e}")))?;
    let [categories, attributes, caption] = v[..] else {
        return Err(UsageError("--judge-weights needs categories,attributes,caption".into()).into());
    };
    let w = JudgeWeights { categories, attributes, caption };
    w.validate()?;
    Ok(w)
}

fn scoring_clients(ctx: &Ctx, config: &PipelineConfig) -> Result<(Box<dyn CaptionClient>, Box<dyn JudgeClient>)> {
    Ok(match ctx.backend() {
        Backend::Live => {
            let need = |s: &Option<_>, name: &str| {
                s.clone().ok_or_else(|| Error::Config(format!("live backend needs endpoints.{name}")))
            };
            (
                Box::new(HttpCaptionClient::new(need(&config.endpoints.caption, "caption")?)),
                Box::new(HttpJudgeClient::new(need(&config.endpoints.judge, "judge")?)),
            )
        }
        _ => (Box::new(ToyCaptioner), Box::new(ToyJudge)),
    })
}

fn score_image(ctx: &Ctx, scene: &Path, image: &Path, weights: Option<&str>) -> Result<()> {
    let config = ctx.config()?;
    let weights = match weights {
        Some(w) => parse_judge_weights(w)?,
        None => config.judge_weights,
    };
    let sg = load_scene(scene)?;
    let pixels = image::open(image)
        .map_err(|source| Error::Image { path: image.to_path_buf(), source })?
        .to_rgb8();
    let img = GeneratedImage::new(pixels, 0, sg.id().unwrap_or("scene"))?;
    let (captioner, judge) = scoring_clients(ctx, &config)?;
    let score = clis_i(&img, &sg, &*captioner, &*judge, &weights, &config.retry)?;
    ctx.emit(&score, || {
        println!("CLIS-I {:.3}", score.score);
        println!("global: {}", score.description.global_caption);
        for r in &score.description.region_captions {
            println!("{:<8} {}", r.object_id, r.caption);
        }
    })
}

fn generate(ctx: &Ctx, a: &crate::args::GenerateArgs) -> Result<()> {
    let mut config = ctx.config()?;
    if let Some(p) = &a.pool {
        config.pool = Some(p.clone());
    }
    if let Some(o) = &a.out {
        config.output_dir = o.clone();
    }
    if let Some(n) = a.lists {
        config.sampling.lists = n;
    }
    if let Some(t) = a.tau_l {
        config.tau_l = t;
    }
    if let Some(t) = a.tau_i {
        config.tau_i = t;
    }
    if let Some(n) = a.images_per_graph {
        config.images_per_graph = n;
    }
    if let Some(n) = a.concurrency {
        config.concurrency = n;
    }
    if !a.categories.is_empty() {
        config.sampling.categories =
            a.categories.iter().map(|c| CategoryEntry { category: c.clone(), weight: 1.0 }).collect();
        config.sampling.category_table = None;
    }
    if !a.cassette.is_empty() {
        config.cassettes = a.cassette.clone();
    }
    config.validate()?;
    let pool_path = config
        .pool
        .clone()
        .ok_or_else(|| UsageError("no pool given; pass --pool or set pool in the config".into()))?;
    let pool = load_pool(&pool_path)?;
    let Clients { text, image, captioner, judge } = Clients::from_config(ctx.backend(), &config)?;
    let (text, recorder) = match &a.record {
        Some(_) => {
            let r = Arc::new(RecordingTextGenerator::new(text));
            (Box::new(Arc::clone(&r)) as Box<dyn TextGenerator>, Some(r))
        }
        None => (text, None),
    };
    let clients = Clients { text, image, captioner, judge };
    let output = pipeline::run(&config, &pool, &clients, &Templates::default())?;
    if let (Some(r), Some(path)) = (&recorder, &a.record) {
        r.save(path)?;
    }
    let report = &output.report;
    ctx.emit(report, || print_report(report, &config.output_dir))
}

fn print_report(report: &RunReport, out: &Path) {
    let c = &report.counts;
    println!("tau_l {}  tau_i {}  seed {}", report.tau_l, report.tau_i, report.seed);
    println!("object lists      {:>6}", c.object_lists);
    println!("scene graphs      {:>6}", c.scene_graphs);
    println!("layout survivors  {:>6}", c.layout_survivors);
    println!("images requested  {:>6}", c.images_requested);
    println!("images generated  {:>6}", c.images_generated);
    println!("images scored     {:>6}", c.images_scored);
    println!("retained          {:>6}", c.retained);
    for (reason, n) in &report.drops {
        println!("drop {:<12} {:>6}", reason.code(), n);
    }
    let bins = |h: &[usize; 10]| h.iter().map(|n| format!("{n:>4}")).collect::<String>();
    println!("CLIS-L bins {}", bins(&report.clis_l_histogram.bins));
    println!("CLIS-I bins {}", bins(&report.clis_i_histogram.bins));
    println!("output {}", out.display());
}

#[derive(Serialize)]
struct FilterSummary {
    manifest: PathBuf,
    tau_l: f64,
    tau_i: f64,
    #[serde(flatten)]
    counts: curator::pipeline::manifest::FilterCounts,
}

fn filter(ctx: &Ctx, manifest: &Path, tau_l: f64, tau_i: f64, out: &Path) -> Result<()> {
    check_threshold("tau_l", tau_l)?;
    check_threshold("tau_i", tau_i)?;
    let records = read_manifest(manifest)?;
    let (mut kept, counts) = filter_records(&records, tau_l, tau_i);
    let src_dir = dir_of(manifest).canonicalize().map_err(|e| Error::io(manifest, e))?;
    let dst_dir = dir_of(out).canonicalize().map_err(|e| Error::io(out, e))?;
    if src_dir != dst_dir {
        // keep image references valid from the new location
        for r in &mut kept {
            r.image = src_dir.join(&r.image);
        }
    }
    write_manifest(out, &kept)?;
    let summary = FilterSummary { manifest: out.to_path_buf(), tau_l, tau_i, counts };
    ctx.emit(&summary, || {
        println!("input        {:>6}", counts.input);
        println!("below tau_l  {:>6}", counts.below_tau_l);
        println!("below tau_i  {:>6}", counts.below_tau_i);
        println!("retained     {:>6}", counts.retained);
        println!("wrote {}", out.display());
    })
}

fn dir_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn export_coco_cmd(ctx: &Ctx, manifest: &Path, out: &Path) -> Result<()> {
    let records = read_manifest(manifest)?;
    let doc = export_coco(&records, &dir_of(manifest))?;
    validate_coco(&doc).map_err(|reason| Error::Export { sample: "document".into(), reason })?;
    write_coco(out, &doc)?;
    let summary = serde_json::json!({
        "out": out,
        "images": doc.images.len(),
        "annotations": doc.annotations.len(),
        "categories": doc.categories.len(),
    });
    ctx.emit(&summary, || {
        println!(
            "{} images, {} annotations, {} categories -> {}",
            doc.images.len(),
            doc.annotations.len(),
            doc.categories.len(),
            out.display()
        )
    })
}

fn export_qa_cmd(ctx: &Ctx, manifest: &Path, out: &Path) -> Result<()> {
    let records = read_manifest(manifest)?;
    let pairs = export_qa(&records, ctx.seed()?);
    write_qa_jsonl(out, &pairs)?;
    let summary = serde_json::json!({"out": out, "samples": records.len(), "pairs": pairs.len()});
    ctx.emit(&summary, || println!("{} pairs from {} samples -> {}", pairs.len(), records.len(), out.display()))
}

fn report(ctx: &Ctx, run: &Path) -> Result<()> {
    let path = if run.is_dir() { run.join(REPORT_FILE) } else { run.to_path_buf() };
    let report = RunReport::load(&path).with_context(|| format!("reading run report {}", path.display()))?;
    ctx.emit(&report, || print_report(&report, dir_of(&path).as_path()))
}
