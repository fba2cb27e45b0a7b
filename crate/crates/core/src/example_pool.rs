//! Index of real-annotation layout pairs keyed by
//! (subject category, object category, relation).

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::scene_graph::{normalize_phrase, validate_scene_graph, SceneGraphDoc};

/// Optional relation synonym table, applied after normalization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationNormalizer {
    synonyms: HashMap<String, String>,
}

impl RelationNormalizer {
    pub fn with_synonyms<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let synonyms = pairs
            .into_iter()
            .map(|(k, v)| (strip_phrase(k.as_ref()), strip_phrase(v.as_ref())))
            .collect();
        Self { synonyms }
    }

    pub fn normalize(&self, phrase: &str) -> Result<String> {
        let key = strip_phrase(phrase);
        if key.is_empty() {
            return Err(Error::Argument("relation phrase is empty".into()));
        }
        Ok(self.synonyms.get(&key).cloned().unwrap_or(key))
    }
}

fn strip_phrase(phrase: &str) -> String {
    let cleaned: String = phrase
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    normalize_phrase(&cleaned)
}

/// Normalizes a relation phrase without a synonym table.
pub fn normalize_relation(phrase: &str) -> Result<String> {
    RelationNormalizer::default().normalize(phrase)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutExample {
    #[serde(rename = "s")]
    pub subject_category: String,
    #[serde(rename = "o")]
    pub object_category: String,
    #[serde(rename = "r")]
    pub relation: String,
    #[serde(rename = "sbox")]
    pub subject_box: BBox,
    #[serde(rename = "obox")]
    pub object_box: BBox,
    #[serde(rename = "src")]
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PoolKey {
    pub subject: String,
    pub object: String,
    pub relation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BuildReport {
    pub documents: usize,
    pub accepted: usize,
    pub examples: usize,
    pub errors: Vec<DocumentError>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentError {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExamplePool {
    index: BTreeMap<PoolKey, Vec<LayoutExample>>,
    size: usize,
    normalizer: RelationNormalizer,
}

impl ExamplePool {
    pub fn new(normalizer: RelationNormalizer) -> Self {
        Self { normalizer, ..Self::default() }
    }

    pub fn from_examples(
        examples: impl IntoIterator<Item = LayoutExample>,
        normalizer: RelationNormalizer,
    ) -> Result<Self> {
        let mut pool = Self::new(normalizer);
        for ex in examples {
            pool.insert(ex)?;
        }
        Ok(pool)
    }

    fn key(&self, s_cat: &str, o_cat: &str, relation: &str) -> Result<PoolKey> {
        Ok(PoolKey {
            subject: normalize_phrase(s_cat),
            object: normalize_phrase(o_cat),
            relation: self.normalizer.normalize(relation)?,
        })
    }

    /// Adds one example, rewriting its key fields to canonical form.
    pub fn insert(&mut self, mut ex: LayoutExample) -> Result<()> {
        let key = self.key(&ex.subject_category, &ex.object_category, &ex.relation)?;
        if key.subject.is_empty() || key.object.is_empty() {
            return Err(Error::Argument("example category is empty".into()));
        }
        ex.subject_category = key.subject.clone();
        ex.object_category = key.object.clone();
        ex.relation = key.relation.clone();
        self.index.entry(key).or_default().push(ex);
        self.size += 1;
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn distinct_keys(&self) -> usize {
        self.index.len()
    }

    pub fn normalizer(&self) -> &RelationNormalizer {
        &self.normalizer
    }

    /// Examples with exactly this key; empty on a miss or an unusable relation.
    pub fn lookup(&self, s_cat: &str, o_cat: &str, relation: &str) -> &[LayoutExample] {
        self.key(s_cat, o_cat, relation)
            .ok()
            .and_then(|k| self.index.get(&k))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn buckets(&self) -> impl Iterator<Item = (&PoolKey, &[LayoutExample])> {
        self.index.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// All examples, bucket by bucket.
    pub fn examples(&self) -> impl Iterator<Item = &LayoutExample> {
        self.index.values().flatten()
    }

    /// Keys ordered by bucket size (descending), ties by key.
    pub fn histogram(&self, top: usize) -> Vec<(PoolKey, usize)> {
        let mut h: Vec<_> = self.index.iter().map(|(k, v)| (k.clone(), v.len())).collect();
        h.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        h.truncate(top);
        h
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for ex in self.examples() {
            let line = serde_json::to_string(ex).map_err(|e| Error::json(path, e))?;
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, normalizer: RelationNormalizer) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pool = Self::new(normalizer);
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: LayoutExample = serde_json::from_str(&line).map_err(|e| Error::json(path, e))?;
            pool.insert(ex)?;
        }
        Ok(pool)
    }
}

/// Builds a pool from annotation documents, one example per relation triple.
/// Documents that fail validation are recorded in the report and skipped.
pub fn build_pool<I>(documents: I, normalizer: RelationNormalizer) -> (ExamplePool, BuildReport)
where
    I: IntoIterator<Item = Result<SceneGraphDoc>>,
{
    let mut pool = ExamplePool::new(normalizer);
    let mut report = BuildReport::default();
    for (index, doc) in documents.into_iter().enumerate() {
        report.documents += 1;
        let outcome = doc.and_then(|doc| {
            let source = doc.id.clone().unwrap_or_else(|| format!("doc-{index}"));
            let sg = validate_scene_graph(doc)?;
            let mut examples = Vec::with_capacity(sg.relations().len());
            for (t, triple) in sg.relations().iter().enumerate() {
                let (s, o) = sg.endpoints(triple).expect("validated triple resolves");
                examples.push(LayoutExample {
                    subject_category: s.category.clone(),
                    object_category: o.category.clone(),
                    relation: triple.relation.clone(),
                    subject_box: s.layout,
                    object_box: o.layout,
                    source_id: format!("{source}#{t}"),
                });
            }
            Ok(examples)
        });
        let result = outcome.and_then(|examples| {
            // a bad relation phrase must not leave a partial document behind
            for ex in &examples {
                pool.key(&ex.subject_category, &ex.object_category, &ex.relation)?;
            }
            let n = examples.len();
            for ex in examples {
                pool.insert(ex)?;
            }
            Ok(n)
        });
        match result {
            Ok(n) => {
                report.accepted += 1;
                report.examples += n;
            }
            Err(e) => report.errors.push(DocumentError { index, message: e.to_string() }),
        }
    }
    (pool, report)
}

/// Reads annotation documents from a JSON Lines file (one scene graph per
/// line) or a JSON array file.
pub fn read_documents(path: &Path) -> Result<Vec<Result<SceneGraphDoc>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('[') {
        let values: Vec<serde_json::Value> =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        return Ok(values
            .into_iter()
            .map(|v| serde_json::from_value(v).map_err(|e| Error::json(path, e)))
            .collect());
    }
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::json(path, e)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_graph::{RawObject, RelationTriple};

    fn doc(id: &str, rels: &[(&str, &str, &str)]) -> SceneGraphDoc {
        let cats = ["man", "horse", "woman"];
        SceneGraphDoc {
            id: Some(id.into()),
            objects: cats
                .iter()
                .enumerate()
                .map(|(i, c)| RawObject {
                    id: c.to_string(),
                    category: c.to_string(),
                    attribute: String::new(),
                    color: None,
                    bbox: Some(vec![0.1 + 0.2 * i as f64, 0.1, 0.15, 0.3]),
                })
                .collect(),
            relations: rels
                .iter()
                .map(|(s, r, o)| RelationTriple {
                    subject_id: s.to_string(),
                    relation: r.to_string(),
                    object_id: o.to_string(),
                })
                .collect(),
            groups: vec![],
            caption: "c".into(),
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_relation("  On Top Of ").unwrap(), "on top of");
        assert_eq!(normalize_relation("NEXT  TO").unwrap(), "next to");
        let n = RelationNormalizer::with_synonyms([("on top of", "on")]);
        assert_eq!(n.normalize("on top of").unwrap(), "on");
        assert_eq!(n.normalize("On-top of!").unwrap(), "on");
        assert!(normalize_relation("  ").is_err());
        assert!(normalize_relation("?!").is_err());
    }

    #[test]
    fn build_counts() {
        let (pool, report) = build_pool(
            vec![Ok(doc("a", &[("man", "riding", "horse"), ("woman", "next to", "horse")]))],
            RelationNormalizer::default(),
        );
        assert_eq!(pool.size(), 2);
        assert_eq!(report.examples, 2);
        let (empty, _) = build_pool(Vec::new(), RelationNormalizer::default());
        assert_eq!(empty.size(), 0);
        assert!(empty.lookup("man", "horse", "riding").is_empty());
    }

    #[test]
    fn malformed_documents_reported() {
        let mut bad = doc("b", &[("man", "riding", "horse")]);
        bad.caption.clear();
        let (pool, report) = build_pool(
            vec![Ok(bad), Ok(doc("a", &[("man", "riding", "horse")]))],
            RelationNormalizer::default(),
        );
        assert_eq!(pool.size(), 1);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].index, 0);
    }

    #[test]
    fn lookup_key_discipline() {
        let (pool, _) = build_pool(
            vec![Ok(doc("a", &[("man", "riding", "horse"), ("woman", "riding", "horse")]))],
            RelationNormalizer::default(),
        );
        let hits = pool.lookup("man", "horse", "Riding");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].subject_category, "man");
        assert!(pool.lookup("horse", "man", "riding").is_empty());
        assert!(pool.lookup("man", "horse", "on").is_empty());
    }

    #[test]
    fn save_load_roundtrip() {
        let (pool, _) = build_pool(
            vec![Ok(doc("a", &[("man", "riding", "horse"), ("woman", "next to", "horse")]))],
            RelationNormalizer::default(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.jsonl");
        pool.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().contains("\"sbox\""));
        let back = ExamplePool::load(&path, RelationNormalizer::default()).unwrap();
        assert_eq!(back, pool);
    }
}
