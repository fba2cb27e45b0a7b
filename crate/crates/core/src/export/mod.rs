//! Exports of curated batches: COCO detection JSON, instruction-tuning QA
//! pairs, and SVG layout renderings.

pub mod coco;
pub mod qa;
pub mod svg;
