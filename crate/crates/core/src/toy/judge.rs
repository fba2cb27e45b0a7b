use crate::clis_i::{JudgeClient, JudgeRequest, JudgeWeights};
use crate::error::ClientError;
use crate::palette;
use crate::scene_graph::normalize_phrase;

/// Offline judge: weighted fraction of matching fields, times 100.
///
/// Fields are one category match per object (weight `categories`), one color
/// match per object with a color token (weight `attributes`), and one global
/// caption field (weight `caption`) that matches when the caption mentions
/// every target category.
#[derive(Debug, Clone, Default)]
pub struct ToyJudge;

/// `(color, category)` read from a "<color> <category>" region caption.
pub fn split_region_caption(caption: &str) -> (Option<&'static str>, String) {
    let norm = normalize_phrase(caption);
    match norm.split_once(' ') {
        Some((first, rest)) if palette::canonical(first).is_some() => (palette::canonical(first), rest.to_string()),
        _ => match palette::canonical(&norm) {
            Some(c) => (Some(c), String::new()),
            None => (None, norm),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldMatch {
    pub field: String,
    pub weight: f64,
    pub matched: bool,
}

pub fn field_matches(request: &JudgeRequest) -> Vec<FieldMatch> {
    let w = JudgeWeights::from_map(&request.weights);
    let mut fields = Vec::new();
    for obj in request.target.objects() {
        let predicted = request
            .predicted
            .region_captions
            .iter()
            .find(|r| r.object_id == obj.id)
            .map(|r| split_region_caption(&r.caption));
        let (color, category) = match &predicted {
            Some((c, cat)) => (*c, cat.as_str()),
            None => (None, ""),
        };
        fields.push(FieldMatch {
            field: format!("{}.category", obj.id),
            weight: w.categories,
            matched: category == normalize_phrase(&obj.category),
        });
        if let Some(target) = obj.color.as_deref().and_then(palette::canonical) {
            fields.push(FieldMatch {
                field: format!("{}.color", obj.id),
                weight: w.attributes,
                matched: color == Some(target),
            });
        }
    }
    let caption = normalize_phrase(&request.predicted.global_caption);
    fields.push(FieldMatch {
        field: "caption".into(),
        weight: w.caption,
        matched: request
            .target
            .objects()
            .iter()
            .all(|o| caption.contains(&normalize_phrase(&o.category))),
    });
    fields
}

impl JudgeClient for ToyJudge {
    fn judge(&self, request: &JudgeRequest) -> Result<f64, ClientError> {
        let fields = field_matches(request);
        let total: f64 = fields.iter().map(|f| f.weight).sum();
        if total <= 0.0 {
            return Err(ClientError::Malformed("judge weights sum to zero".into()));
        }
        let hit: f64 = fields.iter().filter(|f| f.matched).map(|f| f.weight).sum();
        Ok((100.0 * hit / total).clamp(0.0, 100.0))
    }

    fn backend_id(&self) -> &str {
        "toy-judge"
    }
}
