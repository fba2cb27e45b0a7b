//! Relation-conditioned box geometry for synthetic annotations and the
//! offline layout generator.

use rand::Rng;

use crate::geometry::BBox;
use crate::scene_graph::{RawObject, RelationTriple, SceneGraphDoc};

pub const RELATIONS: &[&str] = &["above", "below", "left of", "right of", "on", "next to"];

const TRIES: usize = 200;

pub fn random_object_box<R: Rng + ?Sized>(rng: &mut R) -> BBox {
    loop {
        let w = rng.random_range(0.2..0.4);
        let h = rng.random_range(0.15..0.35);
        let x = rng.random_range(0.02..(0.98 - w));
        let y = rng.random_range(0.02..(0.98 - h));
        if let Ok(b) = BBox::new(x, y, w, h) {
            return b;
        }
    }
}

pub fn random_subject_box<R: Rng + ?Sized>(rng: &mut R) -> BBox {
    loop {
        let w = rng.random_range(0.08..0.22);
        let h = rng.random_range(0.08..0.2);
        let x = rng.random_range(0.01..(0.99 - w));
        let y = rng.random_range(0.01..(0.99 - h));
        if let Ok(b) = BBox::new(x, y, w, h) {
            return b;
        }
    }
}

fn try_subject<R: Rng + ?Sized>(relation: &str, o: &BBox, rng: &mut R) -> Option<BBox> {
    let (ocx, ocy) = (o.x() + o.w() / 2.0, o.y() + o.h() / 2.0);
    let mut w = rng.random_range(0.08..0.22);
    let mut h = rng.random_range(0.08..0.2);
    let gap = rng.random_range(0.02..0.08);
    let jitter = rng.random_range(-0.05..0.05);
    let (x, y) = match relation {
        "above" => (ocx + jitter - w / 2.0, o.y() - gap - h),
        "below" => (ocx + jitter - w / 2.0, o.bottom() + gap),
        "left of" => (o.x() - gap - w, ocy + jitter - h / 2.0),
        "right of" => (o.right() + gap, ocy + jitter - h / 2.0),
        "next to" => {
            if rng.random_bool(0.5) {
                (o.x() - gap - w, ocy + jitter - h / 2.0)
            } else {
                (o.right() + gap, ocy + jitter - h / 2.0)
            }
        }
        "on" => {
            w = o.w() * rng.random_range(0.3..0.6);
            h = o.h() * rng.random_range(0.4..0.8);
            let sink = o.h() * rng.random_range(0.1..0.25);
            (ocx + jitter * o.w() - w / 2.0, o.y() + sink - h)
        }
        _ => return None,
    };
    BBox::new(x, y, w, h).ok()
}

/// A subject box standing in `relation` to `object`, or `None` when the
/// relation is unknown or no placement fits inside the image.
pub fn place_subject<R: Rng + ?Sized>(relation: &str, object: &BBox, rng: &mut R) -> Option<BBox> {
    if !RELATIONS.contains(&relation) {
        return None;
    }
    (0..TRIES).find_map(|_| try_subject(relation, object, rng))
}

/// A (subject, object) pair consistent with `relation`.
pub fn sample_pair<R: Rng + ?Sized>(relation: &str, rng: &mut R) -> Option<(BBox, BBox)> {
    if !RELATIONS.contains(&relation) {
        return None;
    }
    (0..TRIES).find_map(|_| {
        let o = random_object_box(rng);
        place_subject(relation, &o, rng).map(|s| (s, o))
    })
}

/// Two-object annotation documents: `per_key` examples for every ordered
/// category pair and relation.
pub fn synthetic_annotations<R: Rng + ?Sized>(
    categories: &[String],
    relations: &[&str],
    per_key: usize,
    rng: &mut R,
) -> Vec<SceneGraphDoc> {
    let mut docs = Vec::new();
    for s in categories {
        for o in categories {
            for rel in relations {
                for _ in 0..per_key {
                    let Some((sb, ob)) = sample_pair(rel, rng) else { continue };
                    let id = format!("synth-{:06}", docs.len());
                    docs.push(two_object_doc(&id, s, &sb, rel, o, &ob));
                }
            }
        }
    }
    docs
}

/// Prefixes `phrase` with "a" or "an" by its first letter.
pub fn with_article(phrase: &str) -> String {
    let vowel = phrase.chars().next().is_some_and(|c| "aeiouAEIOU".contains(c));
    format!("{} {phrase}", if vowel { "an" } else { "a" })
}

pub fn two_object_doc(id: &str, s: &str, sb: &BBox, rel: &str, o: &str, ob: &BBox) -> SceneGraphDoc {
    let object = |id: &str, cat: &str, b: &BBox| RawObject {
        id: id.into(),
        category: cat.into(),
        attribute: with_article(cat),
        color: None,
        bbox: Some(b.to_array().to_vec()),
    };
    SceneGraphDoc {
        id: Some(id.into()),
        objects: vec![object("s", s, sb), object("o", o, ob)],
        relations: vec![RelationTriple { subject_id: "s".into(), relation: rel.into(), object_id: "o".into() }],
        groups: vec![],
        caption: format!("A {s} {rel} {}.", with_article(o)),
    }
}
