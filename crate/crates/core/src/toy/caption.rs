use std::collections::HashMap;

use image::RgbImage;

use crate::clis_i::{CaptionClient, GLOBAL_INSTRUCTION};
use crate::error::ClientError;
use crate::palette::{self, PALETTE};
use crate::toy::raster::{find_tags, read_tag_at};

/// Offline captioner for toy renderings: reads pixel tags for categories and
/// the dominant palette color for attributes.
#[derive(Debug, Clone, Default)]
pub struct ToyCaptioner;

pub fn dominant_color(img: &RgbImage) -> Option<&'static str> {
    let mut counts: HashMap<&'static str, usize> = HashMap::new();
    for px in img.pixels() {
        if let Some(name) = palette::name_of(px.0) {
            *counts.entry(name).or_default() += 1;
        }
    }
    // ties resolve in palette order
    PALETTE
        .iter()
        .filter_map(|(n, _)| counts.get(n).map(|c| (*n, *c)))
        .fold(None, |best: Option<(&str, usize)>, (n, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((n, c)),
        })
        .map(|(n, _)| n)
}

pub fn region_caption(img: &RgbImage) -> String {
    let label = read_tag_at(img, 0, 0).or_else(|| find_tags(img).into_iter().next().map(|t| t.2));
    match (dominant_color(img), label) {
        (Some(c), Some(l)) => format!("{c} {l}"),
        (None, Some(l)) => l,
        (Some(c), None) => format!("{c} object"),
        (None, None) => "unidentifiable region".into(),
    }
}

pub fn global_caption(img: &RgbImage) -> String {
    let mut labels: Vec<String> = Vec::new();
    for (_, _, l) in find_tags(img) {
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    if labels.is_empty() {
        "an empty picture".into()
    } else {
        format!("a picture of {}", labels.join(", "))
    }
}

impl CaptionClient for ToyCaptioner {
    fn caption(&self, image: &RgbImage, instruction: &str) -> Result<String, ClientError> {
        Ok(if instruction == GLOBAL_INSTRUCTION { global_caption(image) } else { region_caption(image) })
    }

    fn backend_id(&self) -> &str {
        "toy-caption"
    }
}
