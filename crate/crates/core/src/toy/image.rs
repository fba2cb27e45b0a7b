//! Offline layout-conditioned renderer: every object becomes a filled
//! rectangle of its color token with its category stamped as a pixel tag.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clis_i::pixel_rect;
use crate::error::ClientError;
use crate::gen_clients::image::ImageGenerator;
use crate::palette::{self, BACKGROUND, PALETTE};
use crate::scene_graph::{SceneGraph, SceneObject};
use crate::toy::raster::write_tag;

pub fn object_color(obj: &SceneObject) -> &'static str {
    obj.color
        .as_deref()
        .and_then(palette::canonical)
        .unwrap_or_else(|| palette::color_for_label(&obj.category))
}

/// Objects in paint order: larger areas first so small objects stay visible.
fn paint_order(sg: &SceneGraph) -> Vec<&SceneObject> {
    let mut objs: Vec<&SceneObject> = sg.objects().iter().collect();
    objs.sort_by(|a, b| {
        let (aa, ab) = (a.layout.w() * a.layout.h(), b.layout.w() * b.layout.h());
        ab.total_cmp(&aa)
    });
    objs
}

pub fn paint_object(img: &mut RgbImage, obj: &SceneObject, color: [u8; 3]) {
    let r = pixel_rect(&obj.layout, img.width(), img.height());
    for y in r.y..r.y + r.height {
        for x in r.x..r.x + r.width {
            img.put_pixel(x, y, Rgb(color));
        }
    }
    write_tag(img, r.x, r.y, r.width, &obj.category);
}

/// Defect-free rendering of a scene.
pub fn render_scene(sg: &SceneGraph, width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb(BACKGROUND));
    for obj in paint_order(sg) {
        let color = palette::rgb(object_color(obj)).expect("palette token");
        paint_object(&mut img, obj, color);
    }
    img
}

/// Repaints the pixels of `obj`'s region that currently show its own color.
pub fn recolor_object(img: &mut RgbImage, obj: &SceneObject, to: &str) -> bool {
    let (Some(from), Some(to)) = (palette::rgb(object_color(obj)), palette::rgb(to)) else {
        return false;
    };
    let r = pixel_rect(&obj.layout, img.width(), img.height());
    let mut changed = false;
    for y in r.y..r.y + r.height {
        for x in r.x..r.x + r.width {
            if img.get_pixel(x, y).0 == from {
                img.put_pixel(x, y, Rgb(to));
                changed = true;
            }
        }
    }
    changed
}

/// Seeded offline image generator. With probability `defect_rate` per
/// object it either paints the wrong color or leaves the object out, which
/// gives image filtering something to reject.
#[derive(Debug, Clone)]
pub struct ToyImageGenerator {
    pub defect_rate: f64,
}

impl Default for ToyImageGenerator {
    fn default() -> Self {
        Self { defect_rate: 0.15 }
    }
}

impl ImageGenerator for ToyImageGenerator {
    fn generate(&self, sg: &SceneGraph, seed: u64, width: u32, height: u32) -> Result<RgbImage, ClientError> {
        if width == 0 || height == 0 {
            return Err(ClientError::Malformed("zero image size".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = RgbImage::from_pixel(width, height, Rgb(BACKGROUND));
        for obj in paint_order(sg) {
            let own = object_color(obj);
            let defect = rng.random_bool(self.defect_rate.clamp(0.0, 1.0));
            let wrong = rng.random_range(0..PALETTE.len() - 1);
            let drop = rng.random_bool(0.5);
            if !defect {
                paint_object(&mut img, obj, palette::rgb(own).expect("palette token"));
            } else if !drop {
                let others: Vec<_> = PALETTE.iter().filter(|(n, _)| *n != own).collect();
                paint_object(&mut img, obj, others[wrong % others.len()].1);
            }
        }
        Ok(img)
    }

    fn backend_id(&self) -> &str {
        "toy-image"
    }
}
