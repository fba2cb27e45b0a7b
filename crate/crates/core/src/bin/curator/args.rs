use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "curator", version, about = "Generate, score, filter, and export synthetic scene-graph/image samples")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Live,
    Replay,
    Toy,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Pipeline config file (JSON or key=value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Generation and scoring backends.
    #[arg(long, global = true, value_enum, default_value = "toy")]
    pub backend: BackendArg,
    /// Print one machine-readable JSON document to stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or inspect layout example pools.
    #[command(subcommand)]
    Pool(PoolCommand),
    /// Score a scene graph's layout or a generated image.
    #[command(subcommand)]
    Score(ScoreCommand),
    /// Run the generation and filtering pipeline.
    Generate(GenerateArgs),
    /// Re-threshold an already-scored manifest without regenerating.
    Filter(FilterArgs),
    /// Export a curated manifest.
    #[command(subcommand)]
    Export(ExportCommand),
    /// Render a scene graph's layout as SVG.
    Render(RenderArgs),
    /// Summarize a run report.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum PoolCommand {
    /// Build a pool from annotated scene graphs (JSON Lines or a JSON array).
    Build {
        #[arg(long, required = true, num_args = 1..)]
        annotations: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// JSON object mapping relation phrases to canonical phrases.
        #[arg(long)]
        synonyms: Option<PathBuf>,
    },
    /// Show pool size and the most populated keys.
    Stats {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Build a synthetic pool with geometrically consistent relations.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated categories.
        #[arg(long, value_delimiter = ',', required = true)]
        categories: Vec<String>,
        /// Examples per (subject, object, relation) key.
        #[arg(long, default_value_t = 5)]
        per_key: usize,
        /// Also write the generated annotation documents here.
        #[arg(long)]
        annotations_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct LayoutScoring {
    /// alpha,beta,w_size,w_dist,w_dir
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub aggregation: Option<String>,
    /// Triple score used when the pool has no matching example.
    #[arg(long)]
    pub fallback: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum ScoreCommand {
    /// Layout plausibility of a scene graph against a pool (0-100).
    Layout {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        #[command(flatten)]
        scoring: LayoutScoring,
    },
    /// Caption-alignment score of an image against its scene graph (0-100).
    Image {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        image: PathBuf,
        /// categories,attributes,caption
        #[arg(long)]
        judge_weights: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Layout example pool; overrides the config's pool.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Output directory; overrides the config's output_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of object lists to sample.
    #[arg(long)]
    pub lists: Option<usize>,
    #[arg(long)]
    pub tau_l: Option<f64>,
    #[arg(long)]
    pub tau_i: Option<f64>,
    #[arg(long)]
    pub images_per_graph: Option<u32>,
    /// Maximum object lists processed in parallel.
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Comma-separated categories for sampling when the config has none.
    #[arg(long, value_delimiter = ',')]
    pub categories: Vec<String>,
    /// Replay cassette(s) for the text generator.
    #[arg(long)]
    pub cassette: Vec<PathBuf>,
    /// Record text-generator exchanges to this cassette.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Scored manifest, usually raw_manifest.jsonl from a run.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub tau_l: f64,
    #[arg(long)]
    pub tau_i: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// COCO detection JSON.
    Coco {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Instruction-tuning QA pairs as JSON Lines.
    Qa {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub width: u32,
    #[arg(long, default_value_t = 512)]
    pub height: u32,
    /// Draw relations as center-to-center arrows.
    #[arg(long)]
    pub arrows: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory or report.json path.
    #[arg(long)]
    pub run: PathBuf,
}
