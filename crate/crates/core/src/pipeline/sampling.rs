//! Object-list sampling from a category frequency table.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene_graph::ObjectList;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub category: String,
    pub weight: f64,
}

/// Categories with frequency weights, e.g. annotation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CategoryEntry>", into = "Vec<CategoryEntry>")]
pub struct CategoryTable {
    entries: Vec<CategoryEntry>,
}

impl CategoryTable {
    pub fn new(entries: Vec<CategoryEntry>) -> Result<Self> {
        if entries.iter().any(|e| e.category.trim().is_empty()) {
            return Err(Error::Config("category table has an empty category".into()));
        }
        if entries.iter().any(|e| !e.weight.is_finite() || e.weight < 0.0) {
            return Err(Error::Config("category weights must be finite and >= 0".into()));
        }
        if !entries.iter().any(|e| e.weight > 0.0) {
            return Err(Error::Config("category table needs at least one positive weight".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(c, w)| CategoryEntry { category: c.into(), weight: w })
                .collect(),
        )
    }

    /// Reads a JSON list of `{category, weight}` or a `{category: weight}` map.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        match value {
            serde_json::Value::Object(map) => Self::from_pairs(
                map.into_iter()
                    .map(|(k, v)| (k, v.as_f64().unwrap_or(f64::NAN)))
                    .collect::<Vec<_>>(),
            ),
            other => serde_json::from_value(other).map_err(|e| Error::json(path, e)),
        }
    }

    pub fn entries(&self) -> &[CategoryEntry] {
        &self.entries
    }

    pub fn categories(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.category.clone()).collect()
    }

    /// Per-entry sampling weights for `strategy`.
    pub fn sampling_weights(&self, strategy: SamplingStrategy) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| match strategy {
                SamplingStrategy::Uniform => 1.0,
                SamplingStrategy::Proportional => e.weight,
                SamplingStrategy::InverseFrequency if e.weight > 0.0 => 1.0 / e.weight,
                SamplingStrategy::InverseFrequency => 0.0,
            })
            .collect()
    }
}

impl TryFrom<Vec<CategoryEntry>> for CategoryTable {
    type Error = Error;

    fn try_from(v: Vec<CategoryEntry>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CategoryTable> for Vec<CategoryEntry> {
    fn from(t: CategoryTable) -> Self {
        t.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingStrategy {
    Uniform,
    #[default]
    Proportional,
    /// Weight `1 / frequency`, favoring rare categories.
    InverseFrequency,
}

impl std::str::FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "proportional" => Ok(Self::Proportional),
            "inverse-frequency" => Ok(Self::InverseFrequency),
            other => Err(Error::Argument(format!("unknown sampling strategy {other:?}"))),
        }
    }
}

/// `n` object lists with lengths uniform in `len_range` (inclusive).
pub fn sample_object_lists(
    table: &CategoryTable,
    strategy: SamplingStrategy,
    n: usize,
    len_range: (usize, usize),
    seed: u64,
) -> Result<Vec<ObjectList>> {
    let (lo, hi) = len_range;
    if n == 0 {
        return Err(Error::Config("number of object lists must be at least 1".into()));
    }
    if lo == 0 || lo > hi {
        return Err(Error::Config(format!("invalid list length range {lo}..={hi}")));
    }
    let dist = WeightedIndex::new(table.sampling_weights(strategy))
        .map_err(|e| Error::Config(format!("category weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(lo..=hi);
            let entries = (0..len)
                .map(|_| table.entries[dist.sample(&mut rng)].category.clone())
                .collect();
            ObjectList::new(entries).map_err(Error::from)
        })
        .collect()
}
