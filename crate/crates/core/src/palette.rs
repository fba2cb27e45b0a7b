//! Canonical color tokens and their RGB values.

use crate::scene_graph::normalize_phrase;

pub const PALETTE: &[(&str, [u8; 3])] = &[
    ("red", [220, 40, 40]),
    ("green", [40, 160, 60]),
    ("blue", [40, 80, 220]),
    ("yellow", [240, 210, 40]),
    ("orange", [240, 140, 30]),
    ("purple", [140, 60, 180]),
    ("pink", [240, 130, 180]),
    ("brown", [130, 80, 40]),
    ("black", [20, 20, 20]),
    ("white", [250, 250, 250]),
    ("gray", [128, 128, 128]),
];

/// Canvas color; deliberately outside the palette.
pub const BACKGROUND: [u8; 3] = [233, 228, 214];

pub fn rgb(token: &str) -> Option<[u8; 3]> {
    let token = canonical(token)?;
    PALETTE.iter().find(|(n, _)| *n == token).map(|(_, c)| *c)
}

pub fn name_of(pixel: [u8; 3]) -> Option<&'static str> {
    PALETTE.iter().find(|(_, c)| *c == pixel).map(|(n, _)| *n)
}

/// Maps a word to its palette token, accepting a few spelling variants.
pub fn canonical(word: &str) -> Option<&'static str> {
    let w = normalize_phrase(word);
    let w = match w.as_str() {
        "grey" => "gray",
        "violet" => "purple",
        other => other,
    };
    PALETTE.iter().map(|(n, _)| *n).find(|n| *n == w)
}

/// First palette color mentioned in a free-text attribute phrase.
pub fn color_in_text(text: &str) -> Option<&'static str> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .find_map(canonical)
}

/// Deterministic palette pick for objects without a color token.
pub fn color_for_label(label: &str) -> &'static str {
    let h = label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
    PALETTE[(h % PALETTE.len() as u64) as usize].0
}
