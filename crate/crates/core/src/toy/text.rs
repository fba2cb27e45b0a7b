//! Offline stand-in for the scene-graph language model. It answers the two
//! bundled prompts deterministically from `(prompt, seed)`.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::ClientError;
use crate::gen_clients::parse::{LayoutEntry, SceneDescription};
use crate::gen_clients::prompts::{payload_after, DESCRIPTION_REQUEST, LAYOUT_REQUEST};
use crate::gen_clients::text::{GenerationRequest, GenerationResponse, TextGenerator};
use crate::geometry::BBox;
use crate::palette::PALETTE;
use crate::scene_graph::normalize_phrase;
use crate::seeds::derive_seed;
use crate::toy::world::{place_subject, random_object_box, random_subject_box, with_article, RELATIONS};

#[derive(Debug, Clone)]
pub struct ToyTextGenerator {
    /// Chance that a subject is placed ignoring its relation.
    pub sloppy_rate: f64,
    /// Chance that a response carries no JSON at all.
    pub garbage_rate: f64,
    /// Chance that one layout box leaves the image.
    pub invalid_box_rate: f64,
}

impl Default for ToyTextGenerator {
    fn default() -> Self {
        Self { sloppy_rate: 0.3, garbage_rate: 0.05, invalid_box_rate: 0.05 }
    }
}

impl ToyTextGenerator {
    /// Never emits malformed output.
    pub fn clean() -> Self {
        Self { garbage_rate: 0.0, invalid_box_rate: 0.0, ..Self::default() }
    }

    fn describe(&self, objects: &[String], rng: &mut ChaCha8Rng) -> String {
        let attributes: Vec<_> = objects
            .iter()
            .map(|o| {
                let color = PALETTE.choose(rng).expect("palette is non-empty").0;
                json!({"object": o, "attribute": with_article(&format!("{color} {o}")), "color": color})
            })
            .collect();
        let relations: Vec<_> = (1..objects.len())
            .map(|i| {
                let target = rng.random_range(0..i);
                let rel = RELATIONS.choose(rng).expect("relations are non-empty");
                json!({"subject": objects[i], "relation": rel, "object": objects[target]})
            })
            .collect();
        let mentions: Vec<String> = attributes
            .iter()
            .map(|a| {
                let o = a["object"].as_str().unwrap_or_default();
                format!("{} ({o})", with_article(a["color"].as_str().unwrap_or_default()))
            })
            .collect();
        let caption = format!("The picture shows {}.", mentions.join(", "));
        let body = json!({
            "Attributes": attributes,
            "Groups": [objects],
            "Relationships": relations,
            "Caption": caption,
        });
        format!("Here is the description:\n```json\n{body}\n```")
    }

    fn layout(&self, desc: &SceneDescription, rng: &mut ChaCha8Rng) -> String {
        let names: Vec<String> = desc.attributes.iter().map(|a| normalize_phrase(&a.object)).collect();
        let mut boxes: Vec<Option<BBox>> = vec![None; names.len()];
        let find = |name: &str, skip: Option<usize>| {
            let key = normalize_phrase(name);
            names.iter().enumerate().position(|(i, n)| *n == key && Some(i) != skip)
        };
        for rel in &desc.relations {
            let Some(o) = find(&rel.object, None) else { continue };
            let Some(s) = find(&rel.subject, Some(o)) else { continue };
            let object_box = *boxes[o].get_or_insert_with(|| random_object_box(rng));
            if boxes[s].is_none() {
                let placed = if rng.random_bool(self.sloppy_rate) {
                    None
                } else {
                    place_subject(&normalize_phrase(&rel.relation), &object_box, rng)
                };
                boxes[s] = Some(placed.unwrap_or_else(|| random_subject_box(rng)));
            }
        }
        let mut entries: Vec<serde_json::Value> = names
            .iter()
            .zip(&desc.attributes)
            .zip(boxes)
            .map(|((_, a), b)| {
                let b = b.unwrap_or_else(|| random_object_box(rng));
                serde_json::to_value(LayoutEntry { object: a.object.clone(), bbox: b }).expect("entry serializes")
            })
            .collect();
        if !entries.is_empty() && rng.random_bool(self.invalid_box_rate) {
            let i = rng.random_range(0..entries.len());
            entries[i]["bbox"] = json!([0.9, 0.9, 0.3, 0.3]);
        }
        format!("```json\n{}\n```", serde_json::Value::Array(entries))
    }
}

impl TextGenerator for ToyTextGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, ClientError> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(request.seed, &request.prompt));
        let garbage = rng.random_bool(self.garbage_rate);
        let text = if let Some(payload) = payload_after(&request.prompt, DESCRIPTION_REQUEST) {
            let objects: Vec<String> = serde_json::from_str(payload)
                .map_err(|e| ClientError::Malformed(format!("toy model cannot read object list: {e}")))?;
            self.describe(&objects, &mut rng)
        } else if let Some(payload) = payload_after(&request.prompt, LAYOUT_REQUEST) {
            let desc: SceneDescription = serde_json::from_str(payload)
                .map_err(|e| ClientError::Malformed(format!("toy model cannot read description: {e}")))?;
            self.layout(&desc, &mut rng)
        } else {
            return Err(ClientError::Malformed("toy model only answers the bundled prompts".into()));
        };
        let text = if garbage { "I am not sure how to answer that.".to_string() } else { text };
        Ok(GenerationResponse { text, latency_ms: 0, backend: self.backend_id().into() })
    }

    fn backend_id(&self) -> &str {
        "toy-text"
    }
}
