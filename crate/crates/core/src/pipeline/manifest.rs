//! Curated-sample manifests and run reports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene_graph::SceneGraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub root_seed: u64,
    pub item_seed: u64,
    pub image_seed: u64,
    /// Description/layout round that produced the scene graph.
    pub generation_round: u32,
    pub text_backend: String,
    pub image_backend: String,
    pub caption_backend: String,
    pub judge_backend: String,
}

/// One scored image with its scene graph. The curated manifest holds the
/// records passing both thresholds; the raw manifest holds every scored one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub item_id: String,
    pub image_index: u32,
    /// Image path relative to the manifest's directory.
    pub image: PathBuf,
    pub scene_graph: SceneGraph,
    pub clis_l: f64,
    pub clis_i: f64,
    pub provenance: Provenance,
}

impl SampleRecord {
    pub fn passes(&self, tau_l: f64, tau_i: f64) -> bool {
        self.clis_l >= tau_l && self.clis_i >= tau_i
    }
}

/// Writes records as JSON Lines sorted by sample id.
pub fn write_manifest(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut sorted: Vec<&SampleRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in sorted {
        let line = serde_json::to_string(r).map_err(|e| Error::json(path, e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| Error::json(path, e))?);
        }
    }
    Ok(out)
}

/// Reads a curated manifest and checks that every record passes both
/// thresholds.
pub fn load_curated(path: &Path, tau_l: f64, tau_i: f64) -> Result<Vec<SampleRecord>> {
    let records = read_manifest(path)?;
    if let Some(bad) = records.iter().find(|r| !r.passes(tau_l, tau_i)) {
        return Err(Error::Config(format!(
            "{}: sample {} (clis_l {:.3}, clis_i {:.3}) violates thresholds {tau_l}/{tau_i}",
            path.display(),
            bad.sample_id,
            bad.clis_l,
            bad.clis_i
        )));
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub input: usize,
    pub retained: usize,
    pub below_tau_l: usize,
    pub below_tau_i: usize,
}

/// Re-thresholds already-scored records without regenerating anything.
pub fn filter_records(records: &[SampleRecord], tau_l: f64, tau_i: f64) -> (Vec<SampleRecord>, FilterCounts) {
    let mut counts = FilterCounts { input: records.len(), retained: 0, below_tau_l: 0, below_tau_i: 0 };
    let mut kept = Vec::new();
    for r in records {
        if r.clis_l < tau_l {
            counts.below_tau_l += 1;
        } else if r.clis_i < tau_i {
            counts.below_tau_i += 1;
        } else {
            kept.push(r.clone());
        }
    }
    counts.retained = kept.len();
    (kept, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    ParseFail,
    LayoutInvalid,
    BelowTauL,
    BelowTauI,
    ClientError,
}

impl DropReason {
    pub fn code(&self) -> &'static str {
        match self {
            DropReason::ParseFail => "parse-fail",
            DropReason::LayoutInvalid => "layout-invalid",
            DropReason::BelowTauL => "below-tau-l",
            DropReason::BelowTauI => "below-tau-i",
            DropReason::ClientError => "client-error",
        }
    }
}

/// Ten equal-width bins over 0..=100; 100 falls in the last bin.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: [usize; 10],
}

impl Histogram {
    pub fn add(&mut self, score: f64) {
        let bin = ((score / 10.0).floor().max(0.0) as usize).min(9);
        self.bins[bin] += 1;
    }

    pub fn total(&self) -> usize {
        self.bins.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageCounts {
    pub object_lists: usize,
    pub scene_graphs: usize,
    pub layout_survivors: usize,
    pub images_requested: usize,
    pub images_generated: usize,
    pub images_scored: usize,
    pub retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub item_id: String,
    pub objects: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clis_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drop: Option<DropReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub images_requested: usize,
    pub images_generated: usize,
    pub clis_i: Vec<f64>,
    pub retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tau_l: f64,
    pub tau_i: f64,
    pub images_per_graph: u32,
    pub seed: u64,
    pub counts: StageCounts,
    /// Drop counts keyed by reason code. Item-level reasons count items;
    /// `below-tau-i` and image-stage `client-error` count images.
    pub drops: BTreeMap<DropReason, usize>,
    pub clis_l_histogram: Histogram,
    pub clis_i_histogram: Histogram,
    pub items: Vec<ItemSummary>,
    pub started_at_unix: u64,
    pub finished_at_unix: u64,
}

impl RunReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}
