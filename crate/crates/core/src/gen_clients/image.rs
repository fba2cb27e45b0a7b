//! Layout-conditioned image generation clients.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::clis_i::GeneratedImage;
use crate::error::{ClientError, Error, Result};
use crate::gen_clients::http::{decode_png_base64, HttpSettings, JsonClient};
use crate::gen_clients::retry::RetryPolicy;
use crate::scene_graph::SceneGraph;

pub trait ImageGenerator: Send + Sync {
    fn generate(&self, sg: &SceneGraph, seed: u64, width: u32, height: u32) -> Result<RgbImage, ClientError>;

    fn backend_id(&self) -> &str;
}

impl<T: ImageGenerator + ?Sized> ImageGenerator for std::sync::Arc<T> {
    fn generate(&self, sg: &SceneGraph, seed: u64, width: u32, height: u32) -> Result<RgbImage, ClientError> {
        (**self).generate(sg, seed, width, height)
    }

    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceWire {
    pub text: String,
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRequestWire {
    pub caption: String,
    pub instances: Vec<InstanceWire>,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
}

impl ImageRequestWire {
    pub fn from_scene(sg: &SceneGraph, seed: u64, width: u32, height: u32) -> Self {
        Self {
            caption: sg.caption().to_string(),
            instances: sg
                .objects()
                .iter()
                .map(|o| InstanceWire {
                    text: if o.attribute.is_empty() { o.category.clone() } else { o.attribute.clone() },
                    bbox: o.layout.to_array(),
                })
                .collect(),
            seed,
            width,
            height,
        }
    }
}

#[derive(Deserialize)]
struct ImageReply {
    image: String,
}

/// `{caption, instances, seed, width, height} -> {image: base64}` over HTTP.
pub struct HttpImageGenerator {
    client: JsonClient,
}

impl HttpImageGenerator {
    pub fn new(settings: HttpSettings) -> Self {
        Self { client: JsonClient::new(settings) }
    }
}

impl ImageGenerator for HttpImageGenerator {
    fn generate(&self, sg: &SceneGraph, seed: u64, width: u32, height: u32) -> Result<RgbImage, ClientError> {
        let reply: ImageReply = self.client.post(&ImageRequestWire::from_scene(sg, seed, width, height))?;
        decode_png_base64(&reply.image)
    }

    fn backend_id(&self) -> &str {
        self.client.endpoint()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBatch {
    pub images: Vec<GeneratedImage>,
    pub failures: Vec<ImageFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl Default for ImageSize {
    fn default() -> Self {
        Self { width: 512, height: 512 }
    }
}

/// Requests `n` images with seeds `seed..seed+n`; failed seeds are listed in
/// the batch's failure manifest instead of aborting the batch.
pub fn generate_images(
    client: &dyn ImageGenerator,
    sg: &SceneGraph,
    n: u32,
    seed: u64,
    size: ImageSize,
    retry: &RetryPolicy,
) -> Result<ImageBatch> {
    if n == 0 {
        return Err(Error::Argument("image count must be at least 1".into()));
    }
    let sg_ref = sg.id().unwrap_or("scene").to_string();
    let mut images = Vec::with_capacity(n as usize);
    let mut failures = Vec::new();
    for k in 0..u64::from(n) {
        let s = seed.wrapping_add(k);
        let result = retry
            .run(|| client.generate(sg, s, size.width, size.height))
            .map_err(Error::from)
            .and_then(|pixels| GeneratedImage::new(pixels, s, sg_ref.clone()));
        match result {
            Ok(img) => images.push(img),
            Err(e) => failures.push(ImageFailure { seed: s, error: e.to_string() }),
        }
    }
    Ok(ImageBatch { images, failures })
}
