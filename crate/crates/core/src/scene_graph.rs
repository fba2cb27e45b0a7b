//! Scene-graph data model: objects with attributes and layouts, relation
//! triples, groups and a caption.
//!
//! [`SceneGraphDoc`] is the loose on-disk/wire shape; [`SceneGraph`] is only
//! obtainable through [`validate_scene_graph`] and is immutable afterwards.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{LayoutError, Result, ValidationError};
use crate::geometry::BBox;

/// Lowercases, trims and collapses internal whitespace.
pub fn normalize_phrase(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn validate_bbox(values: &[f64]) -> Result<BBox, LayoutError> {
    BBox::from_slice(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub category: String,
    #[serde(default)]
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(rename = "bbox")]
    pub layout: BBox,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationTriple {
    #[serde(rename = "subject")]
    pub subject_id: String,
    pub relation: String,
    #[serde(rename = "object")]
    pub object_id: String,
}

/// A validated scene graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SceneGraphDoc", into = "SceneGraphDoc")]
pub struct SceneGraph {
    id: Option<String>,
    objects: Vec<SceneObject>,
    relations: Vec<RelationTriple>,
    groups: Vec<Vec<String>>,
    caption: String,
}

impl SceneGraph {
    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn relations(&self) -> &[RelationTriple] {
        &self.relations
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn caption(&self) -> &str {
        &self.caption
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Number of objects whose normalized category equals `category`'s.
    pub fn count_category(&self, category: &str) -> usize {
        let key = normalize_phrase(category);
        self.objects
            .iter()
            .filter(|o| normalize_phrase(&o.category) == key)
            .count()
    }

    /// Distinct categories in first-appearance order.
    pub fn categories(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.objects
            .iter()
            .filter(|o| seen.insert(normalize_phrase(&o.category)))
            .map(|o| o.category.as_str())
            .collect()
    }

    /// Resolves a triple to its (subject, object) pair.
    pub fn endpoints(&self, triple: &RelationTriple) -> Option<(&SceneObject, &SceneObject)> {
        Some((self.object(&triple.subject_id)?, self.object(&triple.object_id)?))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    /// Rebuilds the graph with every layout mapped through `f`, revalidating.
    pub fn map_layouts(
        &self,
        mut f: impl FnMut(&SceneObject) -> Result<BBox, LayoutError>,
    ) -> Result<SceneGraph> {
        let mut doc = SceneGraphDoc::from(self.clone());
        for (raw, obj) in doc.objects.iter_mut().zip(&self.objects) {
            raw.bbox = Some(f(obj)?.to_array().to_vec());
        }
        validate_scene_graph(doc)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawObject {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<Vec<f64>>,
}

/// Unvalidated scene-graph document as read from JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraphDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub objects: Vec<RawObject>,
    #[serde(default)]
    pub relations: Vec<RelationTriple>,
    #[serde(default)]
    pub groups: Vec<Vec<String>>,
    #[serde(default)]
    pub caption: String,
}

impl From<SceneGraph> for SceneGraphDoc {
    fn from(sg: SceneGraph) -> Self {
        SceneGraphDoc {
            id: sg.id,
            objects: sg
                .objects
                .into_iter()
                .map(|o| RawObject {
                    id: o.id,
                    category: o.category,
                    attribute: o.attribute,
                    color: o.color,
                    bbox: Some(o.layout.to_array().to_vec()),
                })
                .collect(),
            relations: sg.relations,
            groups: sg.groups,
            caption: sg.caption,
        }
    }
}

impl TryFrom<SceneGraphDoc> for SceneGraph {
    type Error = ValidationError;

    fn try_from(doc: SceneGraphDoc) -> Result<Self, Self::Error> {
        validate_doc(doc)
    }
}

pub fn validate_scene_graph(doc: SceneGraphDoc) -> Result<SceneGraph> {
    Ok(validate_doc(doc)?)
}

fn validate_doc(doc: SceneGraphDoc) -> Result<SceneGraph, ValidationError> {
    if doc.objects.is_empty() {
        return Err(ValidationError::NoObjects);
    }
    let mut ids = HashSet::new();
    let mut objects = Vec::with_capacity(doc.objects.len());
    for (i, raw) in doc.objects.into_iter().enumerate() {
        let id = raw.id.trim().to_string();
        if id.is_empty() {
            return Err(ValidationError::EmptyId(i));
        }
        if !ids.insert(id.clone()) {
            return Err(ValidationError::DuplicateId(id));
        }
        if raw.category.trim().is_empty() {
            return Err(ValidationError::EmptyCategory(id));
        }
        let values = raw.bbox.ok_or_else(|| ValidationError::MissingLayout(id.clone()))?;
        let layout = validate_bbox(&values)
            .map_err(|source| ValidationError::InvalidLayout { id: id.clone(), source })?;
        objects.push(SceneObject {
            id,
            category: raw.category.trim().to_string(),
            attribute: raw.attribute.trim().to_string(),
            color: raw
                .color
                .map(|c| normalize_phrase(&c))
                .filter(|c| !c.is_empty()),
            layout,
        });
    }
    for rel in &doc.relations {
        for end in [&rel.subject_id, &rel.object_id] {
            if !ids.contains(end) {
                return Err(ValidationError::DanglingRelation(end.clone()));
            }
        }
        if rel.subject_id == rel.object_id {
            return Err(ValidationError::SelfRelation(rel.subject_id.clone()));
        }
        if rel.relation.trim().is_empty() {
            return Err(ValidationError::EmptyRelation(
                rel.subject_id.clone(),
                rel.object_id.clone(),
            ));
        }
    }
    for member in doc.groups.iter().flatten() {
        if !ids.contains(member) {
            return Err(ValidationError::DanglingGroupMember(member.clone()));
        }
    }
    let caption = doc.caption.trim().to_string();
    if caption.is_empty() {
        return Err(ValidationError::EmptyCaption);
    }
    Ok(SceneGraph {
        id: doc.id,
        objects,
        relations: doc
            .relations
            .into_iter()
            .map(|r| RelationTriple { relation: r.relation.trim().to_string(), ..r })
            .collect(),
        groups: doc.groups,
        caption,
    })
}

/// Input object list; duplicates denote multiple instances.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ObjectList(Vec<String>);

impl ObjectList {
    pub fn new(entries: Vec<String>) -> Result<Self, ValidationError> {
        if entries.is_empty() {
            return Err(ValidationError::EmptyObjectList);
        }
        if let Some(i) = entries.iter().position(|e| e.trim().is_empty()) {
            return Err(ValidationError::EmptyObjectListEntry(i));
        }
        Ok(Self(entries.into_iter().map(|e| e.trim().to_string()).collect()))
    }

    pub fn entries(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<String>> for ObjectList {
    type Error = ValidationError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ObjectList> for Vec<String> {
    fn from(l: ObjectList) -> Self {
        l.0
    }
}
