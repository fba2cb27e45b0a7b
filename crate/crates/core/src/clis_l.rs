//! Layout plausibility score (CLIS-L).
//!
//! Each relation triple of a scene is compared against pool examples sharing
//! its (subject category, object category, relation) key on three axes:
//! relative size, distance (IoU and center distance), and direction. Every
//! component is the best match over the examples; the triple score is their
//! weighted sum, and the scene score aggregates triple scores onto 0..=100.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::example_pool::{ExamplePool, LayoutExample};
use crate::geometry::{area, direction, iou, rel_dist, sim_score, BBox};
use crate::scene_graph::{RelationTriple, SceneGraph};

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClisLWeights {
    /// IoU term inside the distance score.
    pub alpha: f64,
    /// Center-distance term inside the distance score.
    pub beta: f64,
    pub w_size: f64,
    pub w_dist: f64,
    pub w_dir: f64,
}

impl Default for ClisLWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            w_size: 1.0 / 3.0,
            w_dist: 1.0 / 3.0,
            w_dir: 1.0 / 3.0,
        }
    }
}

impl ClisLWeights {
    pub fn new(alpha: f64, beta: f64, w_size: f64, w_dist: f64, w_dir: f64) -> Result<Self> {
        let w = Self { alpha, beta, w_size, w_dist, w_dir };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.w_size, self.w_dist, self.w_dir];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!("weights must be finite and >= 0: {self:?}")));
        }
        if (self.alpha + self.beta - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Config("alpha + beta must equal 1".into()));
        }
        if (self.w_size + self.w_dist + self.w_dir - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Config("w_size + w_dist + w_dir must equal 1".into()));
        }
        Ok(())
    }

    /// Parses `alpha,beta,w_size,w_dist,w_dir`.
    pub fn parse(text: &str) -> Result<Self> {
        let values: Vec<f64> = text
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Argument(format!("weights {text:?}: {e}")))?;
        match values[..] {
            [a, b, s, d, r] => Self::new(a, b, s, d, r),
            _ => Err(Error::Argument(format!(
                "weights need 5 comma-separated values (alpha,beta,w_size,w_dist,w_dir), got {}",
                values.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Min,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "min" => Ok(Aggregation::Min),
            other => Err(Error::Argument(format!("unknown aggregation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClisLConfig {
    pub weights: ClisLWeights,
    /// Triple score used when the pool has no example for the key.
    pub fallback: f64,
    pub aggregation: Aggregation,
}

impl Default for ClisLConfig {
    fn default() -> Self {
        Self {
            weights: ClisLWeights::default(),
            fallback: 0.5,
            aggregation: Aggregation::Mean,
        }
    }
}

impl ClisLConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(0.0..=1.0).contains(&self.fallback) {
            return Err(Error::Config(format!("fallback {} outside [0, 1]", self.fallback)));
        }
        Ok(())
    }
}

fn pool_miss() -> Error {
    Error::Argument("no pool examples for this key".into())
}

fn ratio(s: &BBox, o: &BBox) -> f64 {
    area(s) / area(o)
}

fn best<F>(examples: &[LayoutExample], mut score: F) -> Result<f64>
where
    F: FnMut(&LayoutExample) -> Result<f64>,
{
    if examples.is_empty() {
        return Err(pool_miss());
    }
    let mut top = f64::NEG_INFINITY;
    for ex in examples {
        top = top.max(score(ex)?);
    }
    Ok(top)
}

pub fn size_score(s: &BBox, o: &BBox, examples: &[LayoutExample]) -> Result<f64> {
    let q = ratio(s, o);
    best(examples, |ex| sim_score(q, ratio(&ex.subject_box, &ex.object_box)))
}

/// Best weighted IoU/center-distance similarity; the max is taken over the
/// weighted sum per example, not per term.
pub fn dist_score(
    s: &BBox,
    o: &BBox,
    examples: &[LayoutExample],
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let query = (iou(s, o), rel_dist(s, o));
    best(examples, |ex| {
        let example = (
            iou(&ex.subject_box, &ex.object_box),
            rel_dist(&ex.subject_box, &ex.object_box),
        );
        distance_similarity(query, example, alpha, beta)
    })
}

/// `alpha * sim(IoU) + beta * sim(RelDist)` for one (query, example) pair of
/// `(iou, rel_dist)` measurements.
pub fn distance_similarity(
    query: (f64, f64),
    example: (f64, f64),
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let total = alpha + beta;
    if total <= 0.0 {
        return Err(Error::Config("alpha + beta must be positive".into()));
    }
    // dividing by the weight sum keeps a perfect match at exactly 1.0
    Ok((alpha * sim_score(query.0, example.0)? + beta * sim_score(query.1, example.1)?) / total)
}

/// Best `(cos θ + 1) / 2` between the query and example directions. Two zero
/// vectors agree fully (1.0); one zero vector is neutral (0.5).
pub fn dir_score(s: &BBox, o: &BBox, examples: &[LayoutExample]) -> Result<f64> {
    let q = direction(s, o);
    best(examples, |ex| {
        let e = direction(&ex.subject_box, &ex.object_box);
        Ok(match (q.is_zero(), e.is_zero()) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.5,
            (false, false) if q == e => 1.0,
            (false, false) => (q.dot(&e).clamp(-1.0, 1.0) + 1.0) / 2.0,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleScore {
    pub size: f64,
    pub dist: f64,
    pub dir: f64,
    pub combined: f64,
    /// False when the pool had no example and `combined` is the fallback.
    pub matched: bool,
    pub examples: usize,
}

pub fn combine(size: f64, dist: f64, dir: f64, weights: &ClisLWeights) -> f64 {
    let total = weights.w_size + weights.w_dist + weights.w_dir;
    let sum = weights.w_size * size + weights.w_dist * dist + weights.w_dir * dir;
    (sum / total).clamp(0.0, 1.0)
}

/// Scores one resolved (subject, object, relation) geometry.
pub fn score_pair(
    subject_category: &str,
    s: &BBox,
    object_category: &str,
    o: &BBox,
    relation: &str,
    pool: &ExamplePool,
    config: &ClisLConfig,
) -> Result<TripleScore> {
    let examples = pool.lookup(subject_category, object_category, relation);
    if examples.is_empty() {
        let f = config.fallback;
        return Ok(TripleScore {
            size: f,
            dist: f,
            dir: f,
            combined: f,
            matched: false,
            examples: 0,
        });
    }
    let w = &config.weights;
    let size = size_score(s, o, examples)?;
    let dist = dist_score(s, o, examples, w.alpha, w.beta)?;
    let dir = dir_score(s, o, examples)?;
    Ok(TripleScore {
        size,
        dist,
        dir,
        combined: combine(size, dist, dir, w),
        matched: true,
        examples: examples.len(),
    })
}

pub fn clis_l_triple(
    triple: &RelationTriple,
    sg: &SceneGraph,
    pool: &ExamplePool,
    config: &ClisLConfig,
) -> Result<TripleScore> {
    let (s, o) = sg.endpoints(triple).ok_or_else(|| {
        Error::Argument(format!(
            "triple ({}, {}, {}) does not resolve in the scene",
            triple.subject_id, triple.relation, triple.object_id
        ))
    })?;
    score_pair(&s.category, &s.layout, &o.category, &o.layout, &triple.relation, pool, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    pub subject: String,
    pub relation: String,
    pub object: String,
    #[serde(flatten)]
    pub score: TripleScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScore {
    /// Aggregated score on 0..=100.
    pub scene_score: f64,
    pub triples: Vec<TripleReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SceneScore {
    pub fn unmatched(&self) -> usize {
        self.triples.iter().filter(|t| !t.score.matched).count()
    }
}

pub fn clis_l_scene(sg: &SceneGraph, pool: &ExamplePool, config: &ClisLConfig) -> Result<SceneScore> {
    let mut triples = Vec::with_capacity(sg.relations().len());
    for triple in sg.relations() {
        let score = clis_l_triple(triple, sg, pool, config)?;
        triples.push(TripleReport {
            subject: triple.subject_id.clone(),
            relation: triple.relation.clone(),
            object: triple.object_id.clone(),
            score,
        });
    }
    let mut warnings = Vec::new();
    if triples.is_empty() {
        warnings.push("scene has no relations; scored as vacuously plausible".to_string());
        return Ok(SceneScore { scene_score: 100.0, triples, warnings });
    }
    let misses = triples.iter().filter(|t| !t.score.matched).count();
    if misses > 0 {
        warnings.push(format!("{misses} triple(s) had no pool match; fallback applied"));
    }
    let values = triples.iter().map(|t| t.score.combined);
    let agg = match config.aggregation {
        Aggregation::Mean => values.sum::<f64>() / triples.len() as f64,
        Aggregation::Min => values.fold(f64::INFINITY, f64::min),
    };
    Ok(SceneScore {
        scene_score: (agg * 100.0).clamp(0.0, 100.0),
        triples,
        warnings,
    })
}
