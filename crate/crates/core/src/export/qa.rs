//! Instruction-tuning question/answer pairs built from fixed templates.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::palette;
use crate::pipeline::manifest::SampleRecord;
use crate::scene_graph::{normalize_phrase, RelationTriple, SceneGraph, SceneObject};
use crate::seeds::derive_seed;

/// Localization questions 1-5 ask for a box given a description.
pub const LOCALIZATION_BOX_QUESTIONS: [&str; 5] = [
    "Where is the object described {attribute} located in the image in terms of the bounding box?",
    "What is the location of object described {attribute} in terms of the bounding box?",
    "Localize the object described {attribute} in terms of bounding box.",
    "Provide a bounding box for the object described {attribute}.",
    "Generate a bounding box for the object described {attribute}.",
];
/// Localization questions 6-8 ask for a description given a box.
pub const LOCALIZATION_TEXT_QUESTIONS: [&str; 3] = [
    "Describe the object located at {layout}.",
    "Provide a caption for the object at {layout}.",
    "What is at location {layout} in image?",
];
pub const LOCALIZATION_BOX_ANSWER: &str = "It is located at {layout}.";
pub const LOCALIZATION_TEXT_ANSWER: &str = "There is a {attribute}.";

/// Attribute questions 1-4.
pub const COLOR_QUESTIONS: [&str; 4] = [
    "What is the color of {obj}?",
    "What color is the {obj}?",
    "What color do you think the {obj} is?",
    "Which color is the {obj}?",
];
/// Attribute questions 5-6.
pub const COUNT_QUESTIONS: [&str; 2] = ["What is the number of {obj}?", "What is the total count of {obj} in the image?"];
pub const COLOR_ANSWER: &str = "{color}.";
pub const COUNT_ANSWER: &str = "{number}.";

pub const RELATION_QUESTION: &str =
    "What is the relationship between the subject described {attribute1} and the object described {attribute2}?";
pub const RELATION_ANSWER: &str = "{subject} {relation} {object}.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QaTask {
    Localization,
    Attribute,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub image: String,
    pub task: QaTask,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grounding: Option<BBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationDirection {
    /// Variants 1-5.
    BoxFromText,
    /// Variants 6-8.
    TextFromBox,
}

impl LocalizationDirection {
    pub fn variants(&self) -> std::ops::RangeInclusive<usize> {
        match self {
            LocalizationDirection::BoxFromText => 1..=5,
            LocalizationDirection::TextFromBox => 6..=8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    /// Variants 1-4.
    Color,
    /// Variants 5-6.
    Count,
}

impl AttributeKind {
    pub fn variants(&self) -> std::ops::RangeInclusive<usize> {
        match self {
            AttributeKind::Color => 1..=4,
            AttributeKind::Count => 5..=6,
        }
    }
}

fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (slot, value) in values {
        out = out.replacen(&format!("{{{slot}}}"), value, 1);
    }
    out
}

/// `[x, y, w, h]` with each value rounded to 3 decimals.
pub fn format_layout(b: &BBox) -> String {
    let r = |v: f64| (v * 1000.0).round() / 1000.0;
    format!("[{}, {}, {}, {}]", r(b.x()), r(b.y()), r(b.w()), r(b.h()))
}

/// Fills the "There is a {attribute}." answer without doubling the article
/// when the attribute already starts with "a" or "an".
pub fn there_is(attribute: &str) -> String {
    let lower = attribute.to_ascii_lowercase();
    if lower.starts_with("a ") || lower.starts_with("an ") {
        format!("There is {attribute}.")
    } else {
        fill(LOCALIZATION_TEXT_ANSWER, &[("attribute", attribute)])
    }
}

fn bad_variant(kind: &str, variant: usize) -> Error {
    Error::Argument(format!("no {kind} template variant {variant}"))
}

/// Localization pair for template `variant` (1-8). `None` when the object
/// has no attribute phrase.
pub fn build_localization_qa(obj: &SceneObject, image: &str, variant: usize) -> Result<Option<QaPair>> {
    let attribute = obj.attribute.trim();
    if !(1..=8).contains(&variant) {
        return Err(bad_variant("localization", variant));
    }
    if attribute.is_empty() {
        return Ok(None);
    }
    let layout = format_layout(&obj.layout);
    let (question, answer) = if variant <= 5 {
        (
            fill(LOCALIZATION_BOX_QUESTIONS[variant - 1], &[("attribute", attribute)]),
            fill(LOCALIZATION_BOX_ANSWER, &[("layout", &layout)]),
        )
    } else {
        (fill(LOCALIZATION_TEXT_QUESTIONS[variant - 6], &[("layout", &layout)]), there_is(attribute))
    };
    Ok(Some(QaPair {
        image: image.to_string(),
        task: QaTask::Localization,
        question,
        answer,
        grounding: Some(obj.layout),
    }))
}

/// Color pair for template `variant` (1-4). `None` when the object carries
/// no color token.
pub fn build_color_qa(obj: &SceneObject, image: &str, variant: usize) -> Result<Option<QaPair>> {
    if !AttributeKind::Color.variants().contains(&variant) {
        return Err(bad_variant("color", variant));
    }
    let Some(color) = obj.color.as_deref() else {
        return Ok(None);
    };
    let color = palette::canonical(color).map_or_else(|| normalize_phrase(color), str::to_string);
    if color.is_empty() {
        return Ok(None);
    }
    Ok(Some(QaPair {
        image: image.to_string(),
        task: QaTask::Attribute,
        question: fill(COLOR_QUESTIONS[variant - 1], &[("obj", &obj.category)]),
        answer: fill(COLOR_ANSWER, &[("color", &color)]),
        grounding: Some(obj.layout),
    }))
}

/// Count pair for template `variant` (5-6). `None` when the category does
/// not occur in the scene.
pub fn build_count_qa(sg: &SceneGraph, category: &str, image: &str, variant: usize) -> Result<Option<QaPair>> {
    if !AttributeKind::Count.variants().contains(&variant) {
        return Err(bad_variant("count", variant));
    }
    let n = sg.count_category(category);
    if n == 0 {
        return Ok(None);
    }
    let category = normalize_phrase(category);
    Ok(Some(QaPair {
        image: image.to_string(),
        task: QaTask::Attribute,
        question: fill(COUNT_QUESTIONS[variant - 5], &[("obj", &category)]),
        answer: fill(COUNT_ANSWER, &[("number", &n.to_string())]),
        grounding: None,
    }))
}

/// Relation pair, or `None` when an endpoint is missing or has no attribute.
pub fn build_relation_qa(triple: &RelationTriple, sg: &SceneGraph, image: &str) -> Option<QaPair> {
    let (s, o) = sg.endpoints(triple)?;
    let (a1, a2) = (s.attribute.trim(), o.attribute.trim());
    if a1.is_empty() || a2.is_empty() {
        return None;
    }
    Some(QaPair {
        image: image.to_string(),
        task: QaTask::Relation,
        question: fill(RELATION_QUESTION, &[("attribute1", a1), ("attribute2", a2)]),
        answer: fill(
            RELATION_ANSWER,
            &[("subject", &s.category), ("relation", &triple.relation), ("object", &o.category)],
        ),
        grounding: None,
    })
}

/// All pairs for one sample: a localization and a color pair per object, a
/// count pair per category, a relation pair per triple. Template variants
/// are drawn from `rng`.
pub fn sample_qa<R: Rng + ?Sized>(sg: &SceneGraph, image: &str, rng: &mut R) -> Vec<QaPair> {
    let mut out = Vec::new();
    for obj in sg.objects() {
        let v = rng.random_range(1..=8);
        out.extend(build_localization_qa(obj, image, v).expect("variant in range"));
        let v = rng.random_range(AttributeKind::Color.variants());
        out.extend(build_color_qa(obj, image, v).expect("variant in range"));
    }
    let categories: BTreeSet<&str> = sg.objects().iter().map(|o| o.category.as_str()).collect();
    for c in categories {
        let v = rng.random_range(AttributeKind::Count.variants());
        out.extend(build_count_qa(sg, c, image, v).expect("variant in range"));
    }
    out.extend(sg.relations().iter().filter_map(|t| build_relation_qa(t, sg, image)));
    out
}

/// Pairs for every record, each sample seeded from `seed` and its id.
pub fn export_qa(records: &[SampleRecord], seed: u64) -> Vec<QaPair> {
    let mut sorted: Vec<&SampleRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    sorted
        .into_iter()
        .flat_map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &r.sample_id));
            let image = r.image.to_string_lossy().replace('\\', "/");
            sample_qa(&r.scene_graph, &image, &mut rng)
        })
        .collect()
}

pub fn write_qa_jsonl(path: &Path, pairs: &[QaPair]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in pairs {
        let line = serde_json::to_string(p).map_err(|e| Error::json(path, e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Every template with its slot markers.
pub fn all_templates() -> Vec<&'static str> {
    let mut all: Vec<&str> = Vec::new();
    all.extend(LOCALIZATION_BOX_QUESTIONS);
    all.extend(LOCALIZATION_TEXT_QUESTIONS);
    all.extend([LOCALIZATION_BOX_ANSWER, LOCALIZATION_TEXT_ANSWER]);
    all.extend(COLOR_QUESTIONS);
    all.extend(COUNT_QUESTIONS);
    all.extend([COLOR_ANSWER, COUNT_ANSWER, RELATION_QUESTION, RELATION_ANSWER]);
    all
}

/// True if `text` is `template` with each `{slot}` replaced by some text.
pub fn matches_template(template: &str, text: &str) -> bool {
    let mut literals = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let end = rest[start..].find('}').map(|e| start + e).unwrap_or(rest.len() - 1);
        literals.push(&rest[..start]);
        rest = &rest[end + 1..];
    }
    literals.push(rest);
    let (first, last) = (literals[0], literals[literals.len() - 1]);
    if literals.len() == 1 {
        return text == first;
    }
    if !text.starts_with(first) || !text[first.len()..].ends_with(last) {
        return false;
    }
    let mut body = &text[first.len()..text.len() - last.len()];
    for lit in &literals[1..literals.len() - 1] {
        match body.find(lit) {
            Some(i) if i > 0 => body = &body[i + lit.len()..],
            _ => return false,
        }
    }
    !body.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_graph::{validate_scene_graph, RawObject, SceneGraphDoc};

    fn obj(id: &str, cat: &str, attr: &str, color: Option<&str>, b: [f64; 4]) -> RawObject {
        RawObject {
            id: id.into(),
            category: cat.into(),
            attribute: attr.into(),
            color: color.map(Into::into),
            bbox: Some(b.to_vec()),
        }
    }

    fn scene() -> SceneGraph {
        validate_scene_graph(SceneGraphDoc {
            objects: vec![
                obj("o1", "dog", "a brown dog", Some("brown"), [0.1, 0.2, 0.3, 0.3]),
                obj("o2", "frisbee", "a red frisbee", Some("red"), [0.5, 0.1, 0.1, 0.1]),
                obj("o3", "sheep", "", None, [0.1, 0.6, 0.2, 0.2]),
                obj("o4", "sheep", "", None, [0.4, 0.6, 0.2, 0.2]),
                obj("o5", "sheep", "", None, [0.7, 0.6, 0.2, 0.2]),
            ],
            relations: vec![
                RelationTriple { subject_id: "o1".into(), relation: "chasing".into(), object_id: "o2".into() },
                RelationTriple { subject_id: "o3".into(), relation: "next to".into(), object_id: "o4".into() },
            ],
            caption: "A dog chasing a frisbee near sheep.".into(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn localization_examples() {
        let sg = scene();
        let dog = sg.object("o1").unwrap();
        let q = build_localization_qa(dog, "i.png", 3).unwrap().unwrap();
        assert_eq!(q.question, "Localize the object described a brown dog in terms of bounding box.");
        assert_eq!(q.answer, "It is located at [0.1, 0.2, 0.3, 0.3].");
        let q = build_localization_qa(dog, "i.png", 6).unwrap().unwrap();
        assert_eq!(q.question, "Describe the object located at [0.1, 0.2, 0.3, 0.3].");
        assert_eq!(q.answer, "There is a brown dog.");
        assert!(build_localization_qa(sg.object("o3").unwrap(), "i.png", 1).unwrap().is_none());
        assert!(build_localization_qa(dog, "i.png", 9).is_err());
    }

    #[test]
    fn article_handling() {
        assert_eq!(there_is("an old car"), "There is an old car.");
        assert_eq!(there_is("red car"), "There is a red car.");
    }

    #[test]
    fn attribute_examples() {
        let sg = scene();
        let q = build_color_qa(sg.object("o2").unwrap(), "i.png", 1).unwrap().unwrap();
        assert_eq!((q.question.as_str(), q.answer.as_str()), ("What is the color of frisbee?", "red."));
        let q = build_count_qa(&sg, "sheep", "i.png", 5).unwrap().unwrap();
        assert_eq!((q.question.as_str(), q.answer.as_str()), ("What is the number of sheep?", "3."));
        assert!(build_count_qa(&sg, "car", "i.png", 5).unwrap().is_none());
        assert!(build_color_qa(sg.object("o3").unwrap(), "i.png", 1).unwrap().is_none());
    }

    #[test]
    fn relation_example() {
        let sg = scene();
        let q = build_relation_qa(&sg.relations()[0], &sg, "i.png").unwrap();
        assert_eq!(q.answer, "dog chasing frisbee.");
        assert_eq!(
            q.question,
            "What is the relationship between the subject described a brown dog and the object described a red frisbee?"
        );
        assert!(build_relation_qa(&sg.relations()[1], &sg, "i.png").is_none());
    }

    #[test]
    fn sampled_pairs_match_templates() {
        let sg = scene();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs = sample_qa(&sg, "i.png", &mut rng);
        assert_eq!(pairs.len(), 2 + 2 + 3 + 1);
        for p in &pairs {
            assert!(all_templates().iter().any(|t| matches_template(t, &p.question)), "{}", p.question);
            assert!(!p.answer.is_empty() && !p.question.contains('{'));
        }
        let mut again = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(sample_qa(&sg, "i.png", &mut again), pairs);
    }

    #[test]
    fn template_matcher() {
        assert!(matches_template("What is the color of {obj}?", "What is the color of car?"));
        assert!(!matches_template("What is the color of {obj}?", "What is the colour of car?"));
        assert!(!matches_template("{a} {b}.", " ."));
    }
}
