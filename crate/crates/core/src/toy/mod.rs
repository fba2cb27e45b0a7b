//! Deterministic offline backends for every client boundary, so the whole
//! pipeline runs without model servers.

pub mod caption;
pub mod image;
pub mod judge;
pub mod raster;
pub mod text;
pub mod world;

pub use caption::ToyCaptioner;
pub use image::ToyImageGenerator;
pub use judge::ToyJudge;
pub use text::ToyTextGenerator;
