//! Pixel tags: a short label stamped into a raster so offline captioners can
//! read back what an offline renderer drew.

use image::{Rgb, RgbImage};

const MAGIC: [u8; 3] = [1, 254, 3];
const LEN_MARK: [u8; 2] = [254, 5];
pub const MAX_LABEL: usize = 48;

pub fn tag_width(label: &str) -> u32 {
    let len = label.len().min(MAX_LABEL);
    (2 + len.div_ceil(3)) as u32
}

/// Writes `label` as a single pixel row starting at `(x, y)`; returns false
/// (writing nothing) when it would not fit in `max_width` pixels.
pub fn write_tag(img: &mut RgbImage, x: u32, y: u32, max_width: u32, label: &str) -> bool {
    let bytes = &label.as_bytes()[..label.len().min(MAX_LABEL)];
    let width = tag_width(label);
    if width > max_width || x + width > img.width() || y >= img.height() {
        return false;
    }
    img.put_pixel(x, y, Rgb(MAGIC));
    img.put_pixel(x + 1, y, Rgb([bytes.len() as u8, LEN_MARK[0], LEN_MARK[1]]));
    for (i, chunk) in bytes.chunks(3).enumerate() {
        let mut px = [0u8; 3];
        px[..chunk.len()].copy_from_slice(chunk);
        img.put_pixel(x + 2 + i as u32, y, Rgb(px));
    }
    true
}

pub fn read_tag_at(img: &RgbImage, x: u32, y: u32) -> Option<String> {
    if x + 2 > img.width() || y >= img.height() || img.get_pixel(x, y).0 != MAGIC {
        return None;
    }
    let len_px = img.get_pixel(x + 1, y).0;
    if len_px[1..] != LEN_MARK {
        return None;
    }
    let len = len_px[0] as usize;
    let cells = len.div_ceil(3) as u32;
    if x + 2 + cells > img.width() {
        return None;
    }
    let mut bytes: Vec<u8> = (0..cells).flat_map(|i| img.get_pixel(x + 2 + i, y).0).collect();
    bytes.truncate(len);
    String::from_utf8(bytes).ok()
}

/// Every readable tag in row-major order.
pub fn find_tags(img: &RgbImage) -> Vec<(u32, u32, String)> {
    let mut out = Vec::new();
    for (x, y, px) in img.enumerate_pixels() {
        if px.0 == MAGIC {
            if let Some(label) = read_tag_at(img, x, y) {
                out.push((x, y, label));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_fit() {
        let mut img = RgbImage::new(20, 4);
        assert!(write_tag(&mut img, 3, 1, 17, "traffic light"));
        assert_eq!(read_tag_at(&img, 3, 1).as_deref(), Some("traffic light"));
        assert_eq!(find_tags(&img), vec![(3, 1, "traffic light".to_string())]);
        assert!(!write_tag(&mut img, 0, 2, 3, "traffic light"));
        assert_eq!(read_tag_at(&img, 0, 2), None);
    }
}
