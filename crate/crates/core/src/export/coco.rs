//! COCO-style detection annotations.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::pipeline::manifest::SampleRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// Absolute `[x, y, w, h]` in whole pixels.
    pub bbox: [f64; 4],
    pub area: f64,
    pub iscrowd: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
    pub supercategory: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

/// Pixel box with corners rounded to the nearest pixel, so adjacent boxes
/// share edges exactly.
pub fn pixel_box(b: &BBox, width: u32, height: u32) -> [f64; 4] {
    let (w, h) = (f64::from(width), f64::from(height));
    let x0 = (b.x() * w).round();
    let y0 = (b.y() * h).round();
    let x1 = (b.right() * w).round();
    let y1 = (b.bottom() * h).round();
    [x0, y0, x1 - x0, y1 - y0]
}

/// Builds the document with ids assigned in sorted order: images by sample
/// id, categories by name, annotations by image then scene order. Image
/// paths resolve against `base` and their sizes come from the files.
pub fn export_coco(records: &[SampleRecord], base: &Path) -> Result<CocoDocument> {
    let mut sorted: Vec<&SampleRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let names: std::collections::BTreeSet<&str> = sorted
        .iter()
        .flat_map(|r| r.scene_graph.objects().iter().map(|o| o.category.as_str()))
        .collect();
    let category_ids: BTreeMap<&str, u64> = names.iter().zip(1..).map(|(n, i)| (*n, i)).collect();

    let mut doc = CocoDocument {
        categories: category_ids
            .iter()
            .map(|(n, id)| CocoCategory { id: *id, name: n.to_string(), supercategory: "object".into() })
            .collect(),
        ..CocoDocument::default()
    };
    for (image_id, r) in (1..).zip(&sorted) {
        let path = base.join(&r.image);
        if !path.is_file() {
            return Err(Error::Export {
                sample: r.sample_id.clone(),
                reason: format!("image file {} not found", path.display()),
            });
        }
        let (width, height) = image::image_dimensions(&path).map_err(|e| Error::Export {
            sample: r.sample_id.clone(),
            reason: format!("{}: {e}", path.display()),
        })?;
        doc.images.push(CocoImage {
            id: image_id,
            file_name: r.image.to_string_lossy().replace('\\', "/"),
            width,
            height,
        });
        for obj in r.scene_graph.objects() {
            let bbox = pixel_box(&obj.layout, width, height);
            doc.annotations.push(CocoAnnotation {
                id: doc.annotations.len() as u64 + 1,
                image_id,
                category_id: category_ids[obj.category.as_str()],
                bbox,
                area: bbox[2] * bbox[3],
                iscrowd: 0,
            });
        }
    }
    Ok(doc)
}

/// Structural checks a COCO consumer relies on: unique ids, resolvable
/// references, boxes inside their image, and consistent areas.
pub fn validate_coco(doc: &CocoDocument) -> Result<(), String> {
    let mut image_sizes = BTreeMap::new();
    for img in &doc.images {
        if img.width == 0 || img.height == 0 || img.file_name.is_empty() {
            return Err(format!("image {} has an empty size or file name", img.id));
        }
        if image_sizes.insert(img.id, (img.width, img.height)).is_some() {
            return Err(format!("duplicate image id {}", img.id));
        }
    }
    let mut category_ids = HashSet::new();
    let mut category_names = HashSet::new();
    for c in &doc.categories {
        if !category_ids.insert(c.id) || !category_names.insert(c.name.as_str()) {
            return Err(format!("duplicate category {} ({})", c.id, c.name));
        }
    }
    let mut annotation_ids = HashSet::new();
    for a in &doc.annotations {
        if !annotation_ids.insert(a.id) {
            return Err(format!("duplicate annotation id {}", a.id));
        }
        let &(w, h) = image_sizes
            .get(&a.image_id)
            .ok_or_else(|| format!("annotation {} references missing image {}", a.id, a.image_id))?;
        if !category_ids.contains(&a.category_id) {
            return Err(format!("annotation {} references missing category {}", a.id, a.category_id));
        }
        let [x, y, bw, bh] = a.bbox;
        if x < 0.0 || y < 0.0 || bw < 0.0 || bh < 0.0 || x + bw > f64::from(w) || y + bh > f64::from(h) {
            return Err(format!("annotation {} box {:?} leaves its {w}x{h} image", a.id, a.bbox));
        }
        if (a.area - bw * bh).abs() > 1e-9 || a.iscrowd != 0 {
            return Err(format!("annotation {} has inconsistent area or iscrowd", a.id));
        }
    }
    Ok(())
}

pub fn write_coco(path: &Path, doc: &CocoDocument) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
