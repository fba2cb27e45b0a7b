//! Pipeline configuration, loaded from JSON or `key=value` lines.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::clis_i::JudgeWeights;
use crate::clis_l::ClisLConfig;
use crate::error::{Error, Result};
use crate::gen_clients::http::HttpSettings;
use crate::gen_clients::image::ImageSize;
use crate::gen_clients::retry::RetryPolicy;
use crate::gen_clients::DecodeParams;
use crate::pipeline::sampling::{CategoryEntry, SamplingStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub strategy: SamplingStrategy,
    /// Number of object lists to sample.
    pub lists: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Inline category table; `category_table` (a file) takes precedence.
    pub categories: Vec<CategoryEntry>,
    pub category_table: Option<PathBuf>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            strategy: SamplingStrategy::default(),
            lists: 20,
            min_len: 2,
            max_len: 6,
            categories: Vec::new(),
            category_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoints {
    pub text: Option<HttpSettings>,
    pub image: Option<HttpSettings>,
    pub caption: Option<HttpSettings>,
    pub judge: Option<HttpSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tau_l: f64,
    pub tau_i: f64,
    pub images_per_graph: u32,
    pub clis_l: ClisLConfig,
    pub judge_weights: JudgeWeights,
    pub sampling: SamplingConfig,
    /// Root seed; every item and image seed derives from it.
    pub seed: u64,
    pub concurrency: usize,
    pub output_dir: PathBuf,
    pub pool: Option<PathBuf>,
    pub image_size: ImageSize,
    pub retry: RetryPolicy,
    pub decode: DecodeParams,
    pub endpoints: Endpoints,
    /// Replay cassettes for the text generator.
    pub cassettes: Vec<PathBuf>,
    /// Defect rate of the offline image generator.
    pub toy_defect_rate: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_l: 70.0,
            tau_i: 80.0,
            images_per_graph: 4,
            clis_l: ClisLConfig::default(),
            judge_weights: JudgeWeights::default(),
            sampling: SamplingConfig::default(),
            seed: 0,
            concurrency: 4,
            output_dir: PathBuf::from("out"),
            pool: None,
            image_size: ImageSize::default(),
            retry: RetryPolicy::default(),
            decode: DecodeParams::default(),
            endpoints: Endpoints::default(),
            cassettes: Vec::new(),
            toy_defect_rate: 0.15,
        }
    }
}

pub fn check_threshold(name: &str, tau: f64) -> Result<()> {
    if !tau.is_finite() || !(0.0..=101.0).contains(&tau) {
        return Err(Error::Config(format!("{name} must lie in [0, 100] (101 rejects everything), got {tau}")));
    }
    Ok(())
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        check_threshold("tau_l", self.tau_l)?;
        check_threshold("tau_i", self.tau_i)?;
        if self.images_per_graph == 0 {
            return Err(Error::Config("images_per_graph must be at least 1".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        if self.image_size.width == 0 || self.image_size.height == 0 {
            return Err(Error::Config("image_size must be non-zero".into()));
        }
        if !(0.0..=1.0).contains(&self.toy_defect_rate) {
            return Err(Error::Config("toy_defect_rate must lie in [0, 1]".into()));
        }
        self.clis_l.validate()?;
        self.judge_weights.validate()
    }

    /// Parses JSON, or `key=value` lines with dotted keys for nesting
    /// (`sampling.lists=20`). Values are read as JSON when possible, else as
    /// strings. Relative paths resolve against the config file's directory.
    pub fn from_text(text: &str) -> Result<Self> {
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))?
        } else {
            key_value_to_json(text)?
        };
        let config: Self = serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_text(&text)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = self.pool.as_mut() {
            fix(p);
        }
        if let Some(p) = self.sampling.category_table.as_mut() {
            fix(p);
        }
        self.cassettes.iter_mut().for_each(fix);
    }
}

fn key_value_to_json(text: &str) -> Result<Value> {
    let mut root = Map::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
        let raw = raw.trim();
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let parts: Vec<&str> = key.trim().split('.').collect();
        let mut node = &mut root;
        for part in &parts[..parts.len() - 1] {
            let entry = node.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
            node = entry
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("line {}: {part} is not a section", n + 1)))?;
        }
        node.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(Value::Object(root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.images_per_graph, 4);
        assert_eq!((c.sampling.min_len, c.sampling.max_len), (2, 6));
    }

    #[test]
    fn key_value_and_json_agree() {
        let kv = "# run\ntau_l = 50\nsampling.lists=7\nsampling.strategy=inverse-frequency\noutput_dir=runs/a\n";
        let json = r#"{"tau_l":50,"sampling":{"lists":7,"strategy":"inverse-frequency"},"output_dir":"runs/a"}"#;
        assert_eq!(PipelineConfig::from_text(kv).unwrap(), PipelineConfig::from_text(json).unwrap());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_text(r#"{"tau_l": 150}"#).is_err());
        assert!(PipelineConfig::from_text(r#"{"images_per_graph": 0}"#).is_err());
        assert!(PipelineConfig::from_text(r#"{"bogus": 1}"#).is_err());
        assert!(PipelineConfig::from_text("tau_l").is_err());
    }
}
