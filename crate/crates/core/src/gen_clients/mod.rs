//! Generation stages: object list to description, description to layout,
//! scene graph to images.

pub mod http;
pub mod image;
pub mod parse;
pub mod prompts;
pub mod retry;
pub mod text;

use serde::{Deserialize, Serialize};

use crate::error::{ClientError, Error, ParseError};
use crate::scene_graph::{validate_scene_graph, ObjectList, SceneGraph};

use self::parse::{apply_layouts, assemble_description, parse_description_response, parse_layout_response};
use self::prompts::{render_description_prompt, render_layout_prompt, PromptTemplate};
use self::retry::RetryPolicy;
use self::text::{GenerationRequest, TextGenerator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeParams {
    pub description_temperature: f64,
    pub layout_temperature: f64,
    pub max_tokens: u32,
    /// Extra full description+layout attempts after an unparseable response.
    pub regeneration_rounds: u32,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            description_temperature: 0.7,
            layout_temperature: 0.2,
            max_tokens: 1024,
            regeneration_rounds: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Templates {
    pub description: PromptTemplate,
    pub layout: PromptTemplate,
}

impl Default for Templates {
    fn default() -> Self {
        Self { description: PromptTemplate::description(), layout: PromptTemplate::layout() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneGenFailure {
    Client(ClientError),
    Parse(ParseError),
    /// Layouts parsed but the resulting graph is not valid.
    Layout(String),
}

impl std::fmt::Display for SceneGenFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SceneGenFailure::Client(e) => write!(f, "client: {e}"),
            SceneGenFailure::Parse(e) => write!(f, "parse: {e}"),
            SceneGenFailure::Layout(e) => write!(f, "layout: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub scene: SceneGraph,
    /// Round (0-based) that produced the scene.
    pub round: u32,
    pub warnings: Vec<String>,
}

/// Runs the description and layout stages for one object list. Parse or
/// layout failures trigger a fresh round with a shifted seed; client errors
/// end the attempt immediately.
pub fn generate_scene_graph(
    client: &dyn TextGenerator,
    templates: &Templates,
    list: &ObjectList,
    params: &DecodeParams,
    retry: &RetryPolicy,
    seed: u64,
    scene_id: &str,
) -> Result<GeneratedScene, SceneGenFailure> {
    let mut last = None;
    for round in 0..=params.regeneration_rounds {
        let round_seed = seed.wrapping_add(u64::from(round));
        match generate_round(client, templates, list, params, retry, round_seed, scene_id) {
            Ok((scene, warnings)) => return Ok(GeneratedScene { scene, round, warnings }),
            Err(e @ SceneGenFailure::Client(_)) => return Err(e),
            Err(e) => {
                log::debug!("{scene_id}: round {round} failed: {e}");
                last = Some(e);
            }
        }
    }
    Err(last.expect("at least one round runs"))
}

fn generate_round(
    client: &dyn TextGenerator,
    templates: &Templates,
    list: &ObjectList,
    params: &DecodeParams,
    retry: &RetryPolicy,
    seed: u64,
    scene_id: &str,
) -> Result<(SceneGraph, Vec<String>), SceneGenFailure> {
    let prompt = render_description_prompt(&templates.description, list)
        .expect("description template role checked at construction");
    let mut warnings = prompt.warnings;
    let request = GenerationRequest {
        prompt: prompt.text,
        temperature: params.description_temperature,
        max_tokens: params.max_tokens,
        seed,
    };
    let raw = retry.run(|| client.generate(&request)).map_err(SceneGenFailure::Client)?;
    let description = parse_description_response(&raw.text).map_err(SceneGenFailure::Parse)?;
    let assembled = assemble_description(list, &description);
    warnings.extend(assembled.warnings);
    let mut doc = assembled.doc;

    let description_json = serde_json::to_string(&description).expect("description serializes");
    let prompt = render_layout_prompt(&templates.layout, &description_json)
        .expect("layout template role checked at construction");
    let request = GenerationRequest {
        prompt: prompt.text,
        temperature: params.layout_temperature,
        max_tokens: params.max_tokens,
        seed,
    };
    let raw = retry.run(|| client.generate(&request)).map_err(SceneGenFailure::Client)?;
    let objects: Vec<(String, String)> =
        doc.objects.iter().map(|o| (o.id.clone(), o.category.clone())).collect();
    let layouts = parse_layout_response(&raw.text, &objects).map_err(|e| match e {
        ParseError::InvalidBox { .. } => SceneGenFailure::Layout(e.to_string()),
        other => SceneGenFailure::Parse(other),
    })?;
    apply_layouts(&mut doc, &layouts);
    doc.id = Some(scene_id.to_string());
    let scene = validate_scene_graph(doc).map_err(|e| match e {
        Error::Validation(v) => SceneGenFailure::Layout(v.to_string()),
        other => SceneGenFailure::Layout(other.to_string()),
    })?;
    Ok((scene, warnings))
}
