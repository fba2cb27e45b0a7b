//! Prompt templates for the description and layout generation stages.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scene_graph::ObjectList;

pub const DESCRIPTION_TEMPLATE: &str = include_str!("../../assets/prompts/description_generator.txt");
pub const LAYOUT_TEMPLATE: &str = include_str!("../../assets/prompts/layout_generator.txt");
pub const DESCRIPTION_EXAMPLES: &str = include_str!("../../assets/prompts/description_examples.txt");
pub const LAYOUT_EXAMPLES: &str = include_str!("../../assets/prompts/layout_examples.txt");

pub const EXAMPLES_SLOT: &str = "in_context_examples";
pub const OBJECT_LIST_SLOT: &str = "object_list";
pub const DESCRIPTION_SLOT: &str = "description";

/// Final request line of the description prompt; the object list follows it.
pub const DESCRIPTION_REQUEST: &str =
    "Please provide a json format with description based on the following object list.";
/// Final request line of the layout prompt; the description follows it.
pub const LAYOUT_REQUEST: &str = "Please provide a json format with Layout based on the following prompt.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptRole {
    DescriptionGenerator,
    LayoutGenerator,
}

impl PromptRole {
    pub fn required_slots(&self) -> &'static [&'static str] {
        match self {
            PromptRole::DescriptionGenerator => &[EXAMPLES_SLOT, OBJECT_LIST_SLOT],
            PromptRole::LayoutGenerator => &[EXAMPLES_SLOT, DESCRIPTION_SLOT],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    role: PromptRole,
    body: String,
    examples: String,
}

/// `{name}` slot markers in order of appearance, where `name` is `[a-z_]+`.
pub fn slots(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(start) = rest.find('{') {
        let after = &rest[start + 1..];
        match after.find('}') {
            Some(end) if end > 0 && after[..end].bytes().all(|b| b.is_ascii_lowercase() || b == b'_') => {
                out.push(&after[..end]);
                rest = &after[end + 1..];
            }
            _ => rest = after,
        }
    }
    out
}

/// Substitutes slots in one pass; substituted text is never rescanned.
fn fill(body: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(body.len() + values.iter().map(|v| v.1.len()).sum::<usize>());
    let mut rest = body;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let hit = after.find('}').and_then(|end| {
            values
                .iter()
                .find(|(name, _)| *name == &after[..end])
                .map(|(_, v)| (end, *v))
        });
        match hit {
            Some((end, value)) => {
                out.push_str(value);
                rest = &after[end + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

impl PromptTemplate {
    pub fn new(role: PromptRole, body: impl Into<String>, examples: impl Into<String>) -> Result<Self> {
        let body = body.into();
        let found = slots(&body);
        let unique: BTreeSet<&str> = found.iter().copied().collect();
        let required: BTreeSet<&str> = role.required_slots().iter().copied().collect();
        if unique != required || found.len() != required.len() {
            return Err(Error::Config(format!(
                "{role:?} template must contain each of {:?} exactly once, found {found:?}",
                role.required_slots()
            )));
        }
        Ok(Self { role, body, examples: examples.into() })
    }

    pub fn description() -> Self {
        Self::new(PromptRole::DescriptionGenerator, DESCRIPTION_TEMPLATE, DESCRIPTION_EXAMPLES)
            .expect("bundled description template is well-formed")
    }

    pub fn layout() -> Self {
        Self::new(PromptRole::LayoutGenerator, LAYOUT_TEMPLATE, LAYOUT_EXAMPLES)
            .expect("bundled layout template is well-formed")
    }

    pub fn load(role: PromptRole, body: &Path, examples: Option<&Path>) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let examples = match examples {
            Some(p) => read(p)?,
            None => String::new(),
        };
        Self::new(role, read(body)?, examples)
    }

    pub fn with_examples(mut self, examples: impl Into<String>) -> Self {
        self.examples = examples.into();
        self
    }

    pub fn role(&self) -> PromptRole {
        self.role
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn examples(&self) -> &str {
        &self.examples
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    pub warnings: Vec<String>,
}

fn examples_block(template: &PromptTemplate, warnings: &mut Vec<String>) -> String {
    let block = template.examples.trim_end_matches('\n');
    if block.trim().is_empty() {
        warnings.push(format!("{:?} prompt rendered without in-context examples", template.role));
    }
    block.to_string()
}

pub fn render_description_prompt(template: &PromptTemplate, list: &ObjectList) -> Result<RenderedPrompt> {
    if template.role != PromptRole::DescriptionGenerator {
        return Err(Error::Argument("expected a description-generator template".into()));
    }
    let mut warnings = Vec::new();
    let examples = examples_block(template, &mut warnings);
    let objects = serde_json::to_string(list.entries()).expect("string list serializes");
    let text = fill(&template.body, &[(EXAMPLES_SLOT, &examples), (OBJECT_LIST_SLOT, &objects)]);
    Ok(RenderedPrompt { text, warnings })
}

pub fn render_layout_prompt(template: &PromptTemplate, description: &str) -> Result<RenderedPrompt> {
    if template.role != PromptRole::LayoutGenerator {
        return Err(Error::Argument("expected a layout-generator template".into()));
    }
    if description.trim().is_empty() {
        return Err(Error::Argument("description is empty".into()));
    }
    let mut warnings = Vec::new();
    let examples = examples_block(template, &mut warnings);
    let text = fill(
        &template.body,
        &[(EXAMPLES_SLOT, &examples), (DESCRIPTION_SLOT, description.trim())],
    );
    Ok(RenderedPrompt { text, warnings })
}

/// Text following `marker` in a rendered prompt, used by offline backends to
/// recover the request payload.
pub fn payload_after<'a>(prompt: &'a str, marker: &str) -> Option<&'a str> {
    prompt.rfind(marker).map(|i| prompt[i + marker.len()..].trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(items: &[&str]) -> ObjectList {
        ObjectList::new(items.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn description_prompt_contains_request_and_list() {
        let p = render_description_prompt(&PromptTemplate::description(), &list(&["dog", "frisbee"])).unwrap();
        assert!(p.text.contains(DESCRIPTION_REQUEST));
        assert!(p.text.ends_with("[\"dog\",\"frisbee\"]\n"));
        assert!(p.warnings.is_empty());
        assert_eq!(payload_after(&p.text, DESCRIPTION_REQUEST), Some("[\"dog\",\"frisbee\"]"));
    }

    #[test]
    fn empty_examples_warn() {
        let t = PromptTemplate::description().with_examples("");
        let p = render_description_prompt(&t, &list(&["dog"])).unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert!(p.text.contains("references.\n\n\nPlease provide"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = PromptTemplate::layout();
        let a = render_layout_prompt(&t, "a dog chasing a frisbee").unwrap();
        let b = render_layout_prompt(&t, "a dog chasing a frisbee").unwrap();
        assert_eq!(a, b);
        assert!(a.text.contains(
            "The six values \"x,y,w,h,x+w,y+h\" are all larger than 0 and smaller than 1."
        ));
        assert!(a.text.trim_end().ends_with("a dog chasing a frisbee"));
    }

    #[test]
    fn layout_prompt_rejects_empty_description() {
        assert!(render_layout_prompt(&PromptTemplate::layout(), "  ").is_err());
    }

    #[test]
    fn substituted_text_is_not_rescanned() {
        let t = PromptTemplate::layout().with_examples("{description}");
        let p = render_layout_prompt(&t, "D").unwrap();
        assert!(p.text.contains("references.\n{description}\n"));
    }

    #[test]
    fn template_slot_contract() {
        assert_eq!(slots("a {x} b {y_z} {Not} {}"), vec!["x", "y_z"]);
        assert!(PromptTemplate::new(PromptRole::LayoutGenerator, "{description}", "").is_err());
        assert!(PromptTemplate::new(
            PromptRole::LayoutGenerator,
            "{in_context_examples}{description}{description}",
            ""
        )
        .is_err());
        assert!(PromptTemplate::new(
            PromptRole::DescriptionGenerator,
            "{in_context_examples} {object_list}",
            ""
        )
        .is_ok());
    }
}
