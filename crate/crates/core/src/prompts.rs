//! Versioned prompt templates.
//!
//! Templates are plain text with a small front-matter block:
//!
//! ```text
//! ---
//! template_id: profiling_v1
//! version: 1
//! required_slots: description, language, code
//! output_schema_id: profiles_v1
//! ---
//! body with {{description}} style slots
//! ```
//!
//! The catalog is closed: exactly the ids in [`TEMPLATE_IDS`], no more, no
//! fewer. The built-in texts live in the crate's `prompts/` directory; the
//! std crate can load replacements from disk.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const MAIN_ANALYSIS: &str = "main_analysis_v1";
pub const PROFILING: &str = "profiling_v1";
pub const PRIORITIZATION: &str = "prioritization_v1";
pub const SPECIALIZED_TASK: &str = "specialized_task_v1";
pub const VALIDATION: &str = "validation_v1";
pub const REPLAN: &str = "replan_v1";
pub const ONE_SHOT_BASELINE: &str = "one_shot_baseline_v1";

pub const TEMPLATE_IDS: [&str; 7] = [
    MAIN_ANALYSIS,
    PROFILING,
    PRIORITIZATION,
    SPECIALIZED_TASK,
    VALIDATION,
    REPLAN,
    ONE_SHOT_BASELINE,
];

const BUILTIN_SOURCES: [&str; 7] = [
    include_str!("../prompts/main_analysis_v1.txt"),
    include_str!("../prompts/profiling_v1.txt"),
    include_str!("../prompts/prioritization_v1.txt"),
    include_str!("../prompts/specialized_task_v1.txt"),
    include_str!("../prompts/validation_v1.txt"),
    include_str!("../prompts/replan_v1.txt"),
    include_str!("../prompts/one_shot_baseline_v1.txt"),
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template:?} needs slot {slot:?}")]
    MissingSlot { template: String, slot: String },
    #[error("malformed template: {0}")]
    Malformed(String),
    #[error("template {template:?} uses undeclared slot {slot:?}")]
    UndeclaredSlot { template: String, slot: String },
    #[error("template {template:?} names unregistered output schema {schema:?}")]
    UnknownSchema { template: String, schema: String },
    #[error("catalog is missing template {0:?}")]
    MissingTemplate(String),
    #[error("template {0:?} defined twice")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub version: u32,
    pub body: String,
    pub required_slots: Vec<String>,
    pub output_schema_id: Option<String>,
}

impl PromptTemplate {
    /// Parse a template file (front-matter plus body).
    pub fn parse(source: &str) -> Result<Self, PromptError> {
        let source = source.strip_prefix('\u{feff}').unwrap_or(source);
        let rest = source
            .strip_prefix("---\n")
            .or_else(|| source.strip_prefix("---\r\n"))
            .ok_or_else(|| PromptError::Malformed("missing front-matter".into()))?;
        let end = rest
            .find("\n---")
            .ok_or_else(|| PromptError::Malformed("unterminated front-matter".into()))?;
        let header = &rest[..end];
        let after = &rest[end + 4..];
        let body = after
            .strip_prefix("\r\n")
            .or_else(|| after.strip_prefix('\n'))
            .unwrap_or(after);

        let mut template_id = None;
        let mut version = None;
        let mut required_slots = Vec::new();
        let mut output_schema_id = None;
        for line in header.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| PromptError::Malformed(alloc::format!("bad header line {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "template_id" => template_id = Some(value.to_string()),
                "version" => {
                    version = Some(value.parse::<u32>().map_err(|_| {
                        PromptError::Malformed(alloc::format!("bad version {value:?}"))
                    })?)
                }
                "required_slots" => {
                    required_slots = value
                        .trim_start_matches('[')
                        .trim_end_matches(']')
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(ToOwned::to_owned)
                        .collect()
                }
                "output_schema_id" => {
                    output_schema_id = Some(value.to_string()).filter(|v| !v.is_empty())
                }
                other => {
                    return Err(PromptError::Malformed(alloc::format!(
                        "unknown header key {other:?}"
                    )))
                }
            }
        }

        let template = Self {
            template_id: template_id
                .ok_or_else(|| PromptError::Malformed("missing template_id".into()))?,
            version: version.ok_or_else(|| PromptError::Malformed("missing version".into()))?,
            body: body.to_string(),
            required_slots,
            output_schema_id,
        };
        template.check()?;
        Ok(template)
    }

    fn check(&self) -> Result<(), PromptError> {
        for slot in slots_in(&self.body) {
            if !self.required_slots.iter().any(|s| s == slot) {
                return Err(PromptError::UndeclaredSlot {
                    template: self.template_id.clone(),
                    slot: slot.to_string(),
                });
            }
        }
        if let Some(schema) = &self.output_schema_id {
            if !crate::schema::is_registered(schema) {
                return Err(PromptError::UnknownSchema {
                    template: self.template_id.clone(),
                    schema: schema.clone(),
                });
            }
        }
        Ok(())
    }

    /// Substitute every `{{slot}}`. Extra bindings are ignored; bound values
    /// are inserted verbatim and never re-expanded.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, PromptError> {
        for slot in &self.required_slots {
            if !bindings.iter().any(|(k, _)| k == slot) {
                return Err(PromptError::MissingSlot {
                    template: self.template_id.clone(),
                    slot: slot.clone(),
                });
            }
        }
        let mut out = String::with_capacity(self.body.len() * 2);
        let mut rest = self.body.as_str();
        while let Some((before, slot, after)) = next_slot(rest) {
            out.push_str(before);
            let value = bindings
                .iter()
                .find(|(k, _)| *k == slot)
                .map(|(_, v)| *v)
                .unwrap_or_default();
            out.push_str(value);
            rest = after;
        }
        out.push_str(rest);
        Ok(out)
    }
}

fn is_slot_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits at the first well-formed `{{name}}`.
fn next_slot(text: &str) -> Option<(&str, &str, &str)> {
    let mut from = 0;
    while let Some(pos) = text[from..].find("{{") {
        let open = from + pos;
        let inner_start = open + 2;
        if let Some(len) = text[inner_start..].find("}}") {
            let name = &text[inner_start..inner_start + len];
            if !name.is_empty() && name.chars().all(is_slot_char) {
                return Some((&text[..open], name, &text[inner_start + len + 2..]));
            }
        }
        from = open + 1;
    }
    None
}

fn slots_in(body: &str) -> Vec<&str> {
    let mut slots = Vec::new();
    let mut rest = body;
    while let Some((_, slot, after)) = next_slot(rest) {
        slots.push(slot);
        rest = after;
    }
    slots
}

/// The closed, read-only set of templates used by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    templates: BTreeMap<String, PromptTemplate>,
}

impl Catalog {
    /// Templates compiled into the crate.
    pub fn builtin() -> Self {
        Self::from_sources(BUILTIN_SOURCES).expect("built-in templates are valid")
    }

    /// Built-in templates with some replaced by `overrides`.
    pub fn with_overrides<'s, I>(overrides: I) -> Result<Self, PromptError>
    where
        I: IntoIterator<Item = &'s str>,
    {
        let mut catalog = Self::builtin();
        let mut seen = Vec::new();
        for source in overrides {
            let template = PromptTemplate::parse(source)?;
            if !TEMPLATE_IDS.contains(&template.template_id.as_str()) {
                return Err(PromptError::UnknownTemplate(template.template_id));
            }
            if seen.contains(&template.template_id) {
                return Err(PromptError::Duplicate(template.template_id));
            }
            seen.push(template.template_id.clone());
            catalog
                .templates
                .insert(template.template_id.clone(), template);
        }
        Ok(catalog)
    }

    /// A complete catalog from template sources.
    pub fn from_sources<'s, I>(sources: I) -> Result<Self, PromptError>
    where
        I: IntoIterator<Item = &'s str>,
    {
        let mut templates = BTreeMap::new();
        for source in sources {
            let template = PromptTemplate::parse(source)?;
            if !TEMPLATE_IDS.contains(&template.template_id.as_str()) {
                return Err(PromptError::UnknownTemplate(template.template_id));
            }
            if templates.contains_key(&template.template_id) {
                return Err(PromptError::Duplicate(template.template_id));
            }
            templates.insert(template.template_id.clone(), template);
        }
        if let Some(missing) = TEMPLATE_IDS.iter().find(|id| !templates.contains_key(**id)) {
            return Err(PromptError::MissingTemplate((*missing).to_string()));
        }
        Ok(Self { templates })
    }

    pub fn get(&self, template_id: &str) -> Result<&PromptTemplate, PromptError> {
        self.templates
            .get(template_id)
            .ok_or_else(|| PromptError::UnknownTemplate(template_id.to_string()))
    }

    pub fn render(&self, template_id: &str, bindings: &[(&str, &str)]) -> Result<String, PromptError> {
        self.get(template_id)?.render(bindings)
    }

    /// template_id → version, recorded in transcripts and bench summaries.
    pub fn versions(&self) -> BTreeMap<String, u32> {
        self.templates
            .iter()
            .map(|(id, t)| (id.clone(), t.version))
            .collect()
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Self::builtin()
    }
}
