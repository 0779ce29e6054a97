//! Question/query template registry.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::window::DateWindow;
use super::ForgeError;
use crate::fhirpath::validate_syntax;
use crate::placeholder::{placeholders, substitute};

/// Implicit slot filled from the bundle; allowed in question text only.
pub const PATIENT_SLOT: &str = "patient_id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseType {
    Count,
    Existence,
    List,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holdout {
    #[default]
    None,
    UnseenQuery,
    UnseenResource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// Draws one distinct value produced by `expression` on the bundle.
    CodeFromPath { expression: String },
    DateWindow { choices: Vec<DateWindow> },
    Enum { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub name: String,
    pub sampler: Sampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub template_id: String,
    pub resource_type: String,
    pub response_type: ResponseType,
    pub question_text: String,
    pub fhirpath_template: String,
    pub slots: Vec<SlotSpec>,
    #[serde(default)]
    pub holdout: Holdout,
}

impl QuestionTemplate {
    pub fn slot(&self, name: &str) -> Option<&SlotSpec> {
        self.slots.iter().find(|s| s.name == name)
    }

    /// Placeholder names a clinician-perspective question must carry.
    pub fn question_slots(&self) -> BTreeSet<String> {
        placeholders(&self.question_text).iter().map(|p| p.name.to_string()).collect()
    }

    fn check(&self) -> Result<(), String> {
        if self.template_id.is_empty() {
            return Err("empty template_id".into());
        }
        let declared: BTreeSet<&str> = self.slots.iter().map(|s| s.name.as_str()).collect();
        if declared.len() != self.slots.len() {
            return Err("duplicate slot name".into());
        }
        if declared.contains(PATIENT_SLOT) {
            return Err(format!("`{PATIENT_SLOT}` is implicit and must not be declared"));
        }
        for p in placeholders(&self.question_text) {
            let known = match self.slot(p.name) {
                Some(spec) => field_allowed(spec, p.field),
                None => p.name == PATIENT_SLOT && p.field.is_none(),
            };
            if !known {
                return Err(format!("question_text uses undeclared placeholder {{{}}}", p.key()));
            }
        }
        for p in placeholders(&self.fhirpath_template) {
            if !self.slot(p.name).is_some_and(|spec| field_allowed(spec, p.field)) {
                return Err(format!("fhirpath_template uses undeclared placeholder {{{}}}", p.key()));
            }
        }
        for spec in &self.slots {
            match &spec.sampler {
                Sampler::CodeFromPath { expression } => {
                    validate_syntax(expression).map_err(|e| format!("slot `{}` expression: {e}", spec.name))?
                }
                Sampler::DateWindow { choices } if choices.is_empty() => {
                    return Err(format!("slot `{}` has no choices", spec.name))
                }
                Sampler::Enum { choices } if choices.is_empty() => {
                    return Err(format!("slot `{}` has no choices", spec.name))
                }
                _ => {}
            }
        }
        let dummy = substitute(&self.fhirpath_template, |p| {
            Some(match p.field {
                Some(_) => "2000-01-01T00:00:00Z".to_string(),
                None => "x".to_string(),
            })
        })
        .expect("dummy binding covers every placeholder");
        validate_syntax(&dummy).map_err(|e| format!("fhirpath_template does not parse: {e}"))
    }
}

fn field_allowed(spec: &SlotSpec, field: Option<&str>) -> bool {
    match (&spec.sampler, field) {
        (_, None) => true,
        (Sampler::DateWindow { .. }, Some("start" | "end")) => true,
        _ => false,
    }
}

/// Templates keyed by id, in id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    templates: BTreeMap<String, QuestionTemplate>,
}

impl Registry {
    pub fn from_json(text: &str) -> Result<Registry, ForgeError> {
        let malformed = |id: &str, reason: String| ForgeError::MalformedTemplate {
            template_id: id.to_string(),
            reason,
        };
        let list: Vec<QuestionTemplate> = serde_json::from_str(text).map_err(|e| malformed("", e.to_string()))?;
        if list.is_empty() {
            return Err(malformed("", "registry has no templates".into()));
        }
        let mut templates = BTreeMap::new();
        for t in list {
            t.check().map_err(|r| malformed(&t.template_id, r))?;
            if templates.contains_key(&t.template_id) {
                return Err(malformed(&t.template_id, "duplicate template_id".into()));
            }
            templates.insert(t.template_id.clone(), t);
        }
        Ok(Registry { templates })
    }

    pub fn get(&self, template_id: &str) -> Option<&QuestionTemplate> {
        self.templates.get(template_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &QuestionTemplate> {
        self.templates.values()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

impl FromIterator<QuestionTemplate> for Registry {
    /// Builds without validation; meant for tests and programmatic registries.
    fn from_iter<I: IntoIterator<Item = QuestionTemplate>>(iter: I) -> Self {
        Registry {
            templates: iter.into_iter().map(|t| (t.template_id.clone(), t)).collect(),
        }
    }
}

pub fn load_templates(path: &Path) -> Result<Registry, ForgeError> {
    let text = std::fs::read_to_string(path).map_err(|e| ForgeError::MalformedTemplate {
        template_id: String::new(),
        reason: format!("{}: {e}", path.display()),
    })?;
    Registry::from_json(&text)
}
