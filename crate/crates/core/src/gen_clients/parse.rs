//! Parsing of free-form generator responses into scene-graph parts.
//!
//! Responses are expected to carry JSON but often wrap it in prose or
//! markdown fences; the first well-formed JSON value wins.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::ParseError;
use crate::geometry::BBox;
use crate::palette;
use crate::scene_graph::{
    normalize_phrase, ObjectList, RawObject, RelationTriple, SceneGraphDoc,
};

/// First well-formed JSON object or array embedded in `raw`.
pub fn extract_json(raw: &str) -> Option<Value> {
    raw.char_indices()
        .filter(|(_, c)| *c == '{' || *c == '[')
        .find_map(|(i, _)| {
            let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
            match stream.next() {
                Some(Ok(v @ (Value::Object(_) | Value::Array(_)))) => Some(v),
                _ => None,
            }
        })
}

fn first_object(raw: &str) -> Option<Map<String, Value>> {
    raw.char_indices().filter(|(_, c)| *c == '{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(m))) => Some(m),
            _ => None,
        }
    })
}

fn key_class(key: &str) -> String {
    key.chars().filter(|c| c.is_ascii_alphabetic()).collect::<String>().to_ascii_lowercase()
}

/// Value under the first key whose letters start with `prefix`.
fn field<'a>(map: &'a Map<String, Value>, prefix: &str) -> Option<&'a Value> {
    map.iter().find(|(k, _)| key_class(k).starts_with(prefix)).map(|(_, v)| v)
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedAttribute {
    pub object: String,
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedRelation {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

/// Everything the description stage contributes to a scene graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneDescription {
    #[serde(rename = "Attributes")]
    pub attributes: Vec<NamedAttribute>,
    #[serde(rename = "Groups")]
    pub groups: Vec<Vec<String>>,
    #[serde(rename = "Relationships")]
    pub relations: Vec<NamedRelation>,
    #[serde(rename = "Caption")]
    pub caption: String,
}

fn bad(field: &'static str, detail: impl Into<String>) -> ParseError {
    ParseError::BadField { field, detail: detail.into() }
}

fn parse_attributes(v: &Value) -> Result<Vec<NamedAttribute>, ParseError> {
    match v {
        Value::Object(m) => Ok(m
            .iter()
            .filter_map(|(k, v)| {
                as_text(v).map(|attribute| NamedAttribute {
                    object: k.trim().to_string(),
                    attribute,
                    color: None,
                })
            })
            .collect()),
        Value::Array(items) => items
            .iter()
            .map(|item| {
                let m = item.as_object().ok_or_else(|| bad("Attributes", "entry is not an object"))?;
                let object = field(m, "object")
                    .or_else(|| field(m, "name"))
                    .and_then(as_text)
                    .ok_or_else(|| bad("Attributes", "entry has no object name"))?;
                let attribute = field(m, "attribute")
                    .or_else(|| field(m, "description"))
                    .and_then(as_text)
                    .unwrap_or_default();
                let color = field(m, "color").and_then(as_text);
                Ok(NamedAttribute { object, attribute, color })
            })
            .collect(),
        _ => Err(bad("Attributes", "expected a list or a map")),
    }
}

fn parse_relations(v: &Value) -> Result<Vec<NamedRelation>, ParseError> {
    let items = v.as_array().ok_or_else(|| bad("Relationships", "expected a list"))?;
    items
        .iter()
        .map(|item| match item {
            Value::Array(parts) if parts.len() == 3 => {
                let t: Vec<String> = parts.iter().filter_map(as_text).collect();
                match &t[..] {
                    [s, r, o] => Ok(NamedRelation { subject: s.clone(), relation: r.clone(), object: o.clone() }),
                    _ => Err(bad("Relationships", "triple entries must be strings")),
                }
            }
            Value::Object(m) => {
                let get = |k: &str| field(m, k).and_then(as_text);
                match (get("subject"), get("relation").or_else(|| get("predicate")), get("object")) {
                    (Some(subject), Some(relation), Some(object)) => {
                        Ok(NamedRelation { subject, relation, object })
                    }
                    _ => Err(bad("Relationships", "entry needs subject, relation and object")),
                }
            }
            _ => Err(bad("Relationships", "entry is neither a triple nor an object")),
        })
        .collect()
}

fn parse_groups(v: &Value) -> Result<Vec<Vec<String>>, ParseError> {
    let items = v.as_array().ok_or_else(|| bad("Groups", "expected a list"))?;
    items
        .iter()
        .map(|g| {
            let members = match g {
                Value::Array(m) => m,
                Value::Object(m) => field(m, "object")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("Groups", "group object has no member list"))?,
                _ => return Err(bad("Groups", "group is neither a list nor an object")),
            };
            Ok(members.iter().filter_map(as_text).collect())
        })
        .collect()
}

pub fn parse_description_response(raw: &str) -> Result<SceneDescription, ParseError> {
    let map = first_object(raw).ok_or_else(|| ParseError::NoJson { raw: raw.to_string() })?;
    let missing = |field: &'static str| ParseError::MissingField { field, raw: raw.to_string() };
    let attributes = parse_attributes(field(&map, "attribute").ok_or_else(|| missing("Attributes"))?)?;
    let relations = parse_relations(field(&map, "relation").ok_or_else(|| missing("Relationships"))?)?;
    let groups = match field(&map, "group") {
        Some(v) => parse_groups(v)?,
        None => Vec::new(),
    };
    let caption = field(&map, "caption")
        .and_then(as_text)
        .filter(|c| !c.is_empty())
        .ok_or_else(|| missing("Caption"))?;
    Ok(SceneDescription { attributes, groups, relations, caption })
}

/// Binds names to object ids: an exact id match first, then the first object
/// of that normalized category not in `taken`.
struct Binder<'a> {
    ids: &'a [String],
    categories: Vec<String>,
}

impl<'a> Binder<'a> {
    fn new(ids: &'a [String], categories: &[String]) -> Self {
        Self { ids, categories: categories.iter().map(|c| normalize_phrase(c)).collect() }
    }

    fn bind(&self, name: &str, taken: &[bool]) -> Option<usize> {
        let name = name.trim();
        if let Some(i) = self.ids.iter().position(|id| id == name) {
            return Some(i);
        }
        let key = normalize_phrase(name);
        self.categories
            .iter()
            .enumerate()
            .find(|(i, c)| **c == key && !taken[*i])
            .map(|(i, _)| i)
    }
}

/// Object ids assigned to an object list: `o1`, `o2`, ...
pub fn object_ids(list: &ObjectList) -> Vec<String> {
    (1..=list.len()).map(|i| format!("o{i}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub doc: SceneGraphDoc,
    pub warnings: Vec<String>,
}

/// Builds an unvalidated scene graph (without layouts) from an object list
/// and its parsed description. Relations or group members naming nothing in
/// the list are dropped with a warning.
pub fn assemble_description(list: &ObjectList, desc: &SceneDescription) -> Assembled {
    let ids = object_ids(list);
    let binder = Binder::new(&ids, list.entries());
    let mut warnings = Vec::new();
    let mut objects: Vec<RawObject> = ids
        .iter()
        .zip(list.entries())
        .map(|(id, cat)| RawObject {
            id: id.clone(),
            category: cat.clone(),
            attribute: String::new(),
            color: None,
            bbox: None,
        })
        .collect();
    let mut described = vec![false; objects.len()];
    for attr in &desc.attributes {
        match binder.bind(&attr.object, &described) {
            Some(i) if !described[i] => {
                described[i] = true;
                let color = attr
                    .color
                    .as_deref()
                    .and_then(palette::canonical)
                    .or_else(|| palette::color_in_text(&attr.attribute));
                objects[i].attribute = attr.attribute.clone();
                objects[i].color = color.map(str::to_string);
            }
            _ => warnings.push(format!("attribute for {:?} matches no undescribed object", attr.object)),
        }
    }
    for (obj, done) in objects.iter_mut().zip(&described) {
        if !done {
            obj.attribute = obj.category.clone();
        }
    }
    let none_taken = vec![false; objects.len()];
    let mut relations = Vec::new();
    for rel in &desc.relations {
        let s = binder.bind(&rel.subject, &none_taken);
        let o = s.and_then(|s| {
            let mut taken = none_taken.clone();
            taken[s] = true;
            binder.bind(&rel.object, &taken)
        });
        match (s, o) {
            (Some(s), Some(o)) if s != o && !rel.relation.trim().is_empty() => relations.push(RelationTriple {
                subject_id: ids[s].clone(),
                relation: rel.relation.trim().to_string(),
                object_id: ids[o].clone(),
            }),
            _ => warnings.push(format!(
                "dropped relation ({}, {}, {})",
                rel.subject, rel.relation, rel.object
            )),
        }
    }
    let mut groups = Vec::new();
    for g in &desc.groups {
        // repeated names within a group bind to distinct objects
        let mut taken = none_taken.clone();
        let mut members = Vec::new();
        for name in g {
            match binder.bind(name, &taken) {
                Some(i) if !taken[i] => {
                    taken[i] = true;
                    members.push(ids[i].clone());
                }
                _ => warnings.push(format!("dropped group member {name:?}")),
            }
        }
        if !members.is_empty() {
            groups.push(members);
        }
    }
    Assembled {
        doc: SceneGraphDoc { id: None, objects, relations, groups, caption: desc.caption.clone() },
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub object: String,
    pub bbox: BBox,
}

/// Serializes layouts in the response format the layout prompt asks for.
pub fn serialize_layouts(entries: &[LayoutEntry]) -> String {
    serde_json::to_string(entries).expect("layout entries serialize")
}

/// A layout entry bound to a scene object.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundLayout {
    pub object_id: String,
    pub name: String,
    pub bbox: BBox,
}

/// Parses a layout response and binds each entry to one of `objects`
/// (`(id, category)` pairs). Names bind case-insensitively; repeated names
/// bind to same-category objects in order.
pub fn parse_layout_response(raw: &str, objects: &[(String, String)]) -> Result<Vec<BoundLayout>, ParseError> {
    let value = extract_json(raw).ok_or_else(|| ParseError::NoJson { raw: raw.to_string() })?;
    let items = match &value {
        Value::Array(items) => items.clone(),
        Value::Object(m) => field(m, "layout")
            .and_then(Value::as_array)
            .cloned()
            .ok_or_else(|| ParseError::MissingField { field: "Layout", raw: raw.to_string() })?,
        _ => unreachable!("extract_json only yields objects and arrays"),
    };
    let ids: Vec<String> = objects.iter().map(|(id, _)| id.clone()).collect();
    let cats: Vec<String> = objects.iter().map(|(_, c)| c.clone()).collect();
    let binder = Binder::new(&ids, &cats);
    let mut taken = vec![false; objects.len()];
    let mut out = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let m = item.as_object().ok_or_else(|| bad("Layout", format!("entry {index} is not an object")))?;
        let name = field(m, "object")
            .and_then(as_text)
            .ok_or_else(|| bad("Layout", format!("entry {index} has no object name")))?;
        let values: Vec<f64> = field(m, "bbox")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .ok_or_else(|| bad("Layout", format!("entry {index} has no bbox list")))?;
        let bbox = BBox::from_slice(&values)
            .map_err(|source| ParseError::InvalidBox { index, object: name.clone(), source })?;
        let slot = binder.bind(&name, &taken).ok_or_else(|| ParseError::Unbound(name.clone()))?;
        if taken[slot] {
            return Err(ParseError::Unbound(name));
        }
        taken[slot] = true;
        out.push(BoundLayout { object_id: ids[slot].clone(), name, bbox });
    }
    Ok(out)
}

/// Attaches bound layouts to an assembled document.
pub fn apply_layouts(doc: &mut SceneGraphDoc, layouts: &[BoundLayout]) {
    for l in layouts {
        if let Some(obj) = doc.objects.iter_mut().find(|o| o.id == l.object_id) {
            obj.bbox = Some(l.bbox.to_array().to_vec());
        }
    }
}
