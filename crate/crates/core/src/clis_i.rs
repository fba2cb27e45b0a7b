//! Image alignment score (CLIS-I).
//!
//! A caption client describes the whole image and the crop under each
//! object's layout; a judge client compares that predicted description with
//! the target scene graph and returns a score on 0..=100.

use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{ClientError, Error, Result};
use crate::gen_clients::http::{encode_png_base64, HttpSettings, JsonClient};
use crate::gen_clients::retry::RetryPolicy;
use crate::geometry::BBox;
use crate::scene_graph::SceneGraph;

pub const GLOBAL_INSTRUCTION: &str = "Describe this image in one sentence.";
pub const REGION_INSTRUCTION: &str =
    "Name the single main object in this image region and its color.";

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedImage {
    pub pixels: RgbImage,
    pub source_seed: u64,
    pub scene_graph_ref: String,
}

impl GeneratedImage {
    pub fn new(pixels: RgbImage, source_seed: u64, scene_graph_ref: impl Into<String>) -> Result<Self> {
        if pixels.width() == 0 || pixels.height() == 0 {
            return Err(Error::Argument("image has zero extent".into()));
        }
        Ok(Self { pixels, source_seed, scene_graph_ref: scene_graph_ref.into() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Pixel rectangle covered by `b` on a `width`×`height` raster. Bounds are
/// rounded half-up, then clamped to the raster with a 1×1 minimum.
pub fn pixel_rect(b: &BBox, width: u32, height: u32) -> PixelRect {
    let axis = |start: f64, extent: f64, size: u32| -> (u32, u32) {
        let size = i64::from(size.max(1));
        let lo = round_half_up(start * size as f64).clamp(0, size - 1);
        let hi = round_half_up((start + extent) * size as f64).clamp(0, size);
        let len = (hi - lo).max(1).min(size - lo);
        (lo as u32, len as u32)
    };
    let (x, w) = axis(b.x(), b.w(), width);
    let (y, h) = axis(b.y(), b.h(), height);
    PixelRect { x, y, width: w, height: h }
}

pub fn crop_region(img: &GeneratedImage, b: &BBox) -> RgbImage {
    let r = pixel_rect(b, img.pixels.width(), img.pixels.height());
    image::imageops::crop_imm(&img.pixels, r.x, r.y, r.width, r.height).to_image()
}

pub trait CaptionClient: Send + Sync {
    fn caption(&self, image: &RgbImage, instruction: &str) -> Result<String, ClientError>;

    fn backend_id(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCaption {
    pub object_id: String,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedDescription {
    pub global_caption: String,
    pub region_captions: Vec<RegionCaption>,
}

fn nonempty(text: String, what: &str) -> Result<String, ClientError> {
    if text.trim().is_empty() {
        Err(ClientError::Malformed(format!("empty {what} caption")))
    } else {
        Ok(text.trim().to_string())
    }
}

/// Captions the whole image, then each object region in scene order.
pub fn describe(
    client: &dyn CaptionClient,
    img: &GeneratedImage,
    sg: &SceneGraph,
    retry: &RetryPolicy,
) -> Result<PredictedDescription> {
    let global = retry.run(|| client.caption(&img.pixels, GLOBAL_INSTRUCTION))?;
    let global_caption = nonempty(global, "global")?;
    let mut region_captions = Vec::with_capacity(sg.objects().len());
    for obj in sg.objects() {
        let crop = crop_region(img, &obj.layout);
        let text = retry.run(|| client.caption(&crop, REGION_INSTRUCTION))?;
        region_captions.push(RegionCaption {
            object_id: obj.id.clone(),
            caption: nonempty(text, "region")?,
        });
    }
    Ok(PredictedDescription { global_caption, region_captions })
}

/// Relative significance of scene-graph parts passed to the judge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeWeights {
    pub categories: f64,
    pub attributes: f64,
    pub caption: f64,
}

impl Default for JudgeWeights {
    fn default() -> Self {
        Self { categories: 0.5, attributes: 0.3, caption: 0.2 }
    }
}

impl JudgeWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.categories, self.attributes, self.caption];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) || all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(format!("judge weights must be >= 0 with a positive sum: {self:?}")));
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("categories".to_string(), self.categories),
            ("attributes".to_string(), self.attributes),
            ("caption".to_string(), self.caption),
        ])
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Self {
        let d = Self::default();
        Self {
            categories: map.get("categories").copied().unwrap_or(d.categories),
            attributes: map.get("attributes").copied().unwrap_or(d.attributes),
            caption: map.get("caption").copied().unwrap_or(d.caption),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub predicted: PredictedDescription,
    pub target: SceneGraph,
    pub weights: BTreeMap<String, f64>,
}

pub trait JudgeClient: Send + Sync {
    /// Similarity of the predicted description to the target, on 0..=100.
    fn judge(&self, request: &JudgeRequest) -> Result<f64, ClientError>;

    fn backend_id(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub score: f64,
    pub description: PredictedDescription,
}

pub fn clis_i(
    img: &GeneratedImage,
    sg: &SceneGraph,
    captioner: &dyn CaptionClient,
    judge: &dyn JudgeClient,
    weights: &JudgeWeights,
    retry: &RetryPolicy,
) -> Result<ImageScore> {
    let description = describe(captioner, img, sg, retry)?;
    let request = JudgeRequest {
        predicted: description,
        target: sg.clone(),
        weights: weights.to_map(),
    };
    let score = retry.run(|| judge.judge(&request))?;
    if !score.is_finite() || !(0.0..=100.0).contains(&score) {
        return Err(ClientError::Malformed(format!("judge score {score} outside [0, 100]")).into());
    }
    Ok(ImageScore { score, description: request.predicted })
}

#[derive(Serialize)]
struct CaptionWire<'a> {
    image: String,
    instruction: &'a str,
}

#[derive(Deserialize)]
struct CaptionReply {
    caption: String,
}

#[derive(Deserialize)]
struct ScoreReply {
    score: f64,
}

/// Caption client speaking `{image, instruction} -> {caption}` over HTTP.
pub struct HttpCaptionClient {
    client: JsonClient,
}

impl HttpCaptionClient {
    pub fn new(settings: HttpSettings) -> Self {
        Self { client: JsonClient::new(settings) }
    }
}

impl CaptionClient for HttpCaptionClient {
    fn caption(&self, image: &RgbImage, instruction: &str) -> Result<String, ClientError> {
        let body = CaptionWire { image: encode_png_base64(image)?, instruction };
        let reply: CaptionReply = self.client.post(&body)?;
        Ok(reply.caption)
    }

    fn backend_id(&self) -> &str {
        self.client.endpoint()
    }
}

/// Judge client speaking `{predicted, target, weights} -> {score}` over HTTP.
pub struct HttpJudgeClient {
    client: JsonClient,
}

impl HttpJudgeClient {
    pub fn new(settings: HttpSettings) -> Self {
        Self { client: JsonClient::new(settings) }
    }
}

impl JudgeClient for HttpJudgeClient {
    fn judge(&self, request: &JudgeRequest) -> Result<f64, ClientError> {
        let reply: ScoreReply = self.client.post(request)?;
        Ok(reply.score)
    }

    fn backend_id(&self) -> &str {
        self.client.endpoint()
    }
}
