//! Slot sampling, answerability and template instantiation.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::Rng;
use serde_json::Value;

use super::answer::execute_answer_in;
use super::template::{QuestionTemplate, ResponseType, Sampler, PATIENT_SLOT};
use super::window::{Bounds, DateWindow};
use super::ForgeError;
use crate::fhirpath::{escape_string, evaluate, parse, validate_syntax, EvalContext};
use crate::paraphrase::ParaphraseCandidate;
use crate::placeholder::substitute;
use crate::store::PatientBundle;
use crate::temporal::format_instant;
use crate::value::FhirValue;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotBinding {
    pub template_id: String,
    pub patient_id: String,
    /// Slot name to the value shown in questions (window label for date windows).
    pub values: BTreeMap<String, String>,
    /// Query bounds of each date-window slot.
    pub windows: BTreeMap<String, Bounds>,
    /// Observable span of the template's date window, clipped to the clock.
    pub resolved_window: Option<(DateTime<Utc>, DateTime<Utc>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotAnswerable {
    pub template_id: String,
    pub patient_id: String,
    pub reason: String,
}

/// A binding together with its instantiated query and executed answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grounding {
    pub binding: SlotBinding,
    pub fhirpath: String,
    pub answer: Value,
}

pub fn sample_slots(
    template: &QuestionTemplate,
    bundle: &PatientBundle,
    rng: &mut impl Rng,
) -> Result<SlotBinding, NotAnswerable> {
    ground(template, bundle, rng).map(|g| g.binding)
}

/// Samples a binding and checks that the instantiated query has an answer.
///
/// Answerable means the query runs in strict-path mode and: existence
/// yields a boolean; count yields an integer and the template's resource
/// type is present in the bundle; list and exact yield a non-empty result.
pub fn ground(template: &QuestionTemplate, bundle: &PatientBundle, rng: &mut impl Rng) -> Result<Grounding, NotAnswerable> {
    let refuse = |reason: String| NotAnswerable {
        template_id: template.template_id.clone(),
        patient_id: bundle.patient_id().to_string(),
        reason,
    };
    let mut values = BTreeMap::new();
    let mut windows = BTreeMap::new();
    let mut resolved_window = None;
    for slot in &template.slots {
        match &slot.sampler {
            Sampler::CodeFromPath { expression } => {
                let candidates = path_candidates(expression, bundle).map_err(|e| refuse(format!("slot `{}`: {e}", slot.name)))?;
                if candidates.is_empty() {
                    return Err(refuse(format!("slot `{}` has no candidate values", slot.name)));
                }
                let pick = candidates[rng.random_range(0..candidates.len())].clone();
                values.insert(slot.name.clone(), pick);
            }
            Sampler::Enum { choices } => {
                let pick = choices[rng.random_range(0..choices.len())].clone();
                values.insert(slot.name.clone(), pick);
            }
            Sampler::DateWindow { choices } => {
                let resolvable: Vec<(DateWindow, Bounds)> =
                    choices.iter().filter_map(|w| Some((*w, w.resolve(bundle)?))).collect();
                if resolvable.is_empty() {
                    return Err(refuse(format!("slot `{}` has no resolvable window", slot.name)));
                }
                let (window, bounds) = resolvable[rng.random_range(0..resolvable.len())];
                values.insert(slot.name.clone(), window.label().to_string());
                windows.insert(slot.name.clone(), bounds);
                let clock = bundle.clock().expect("windows resolve only with a clock");
                resolved_window.get_or_insert(bounds.observed(clock));
            }
        }
    }
    let binding = SlotBinding {
        template_id: template.template_id.clone(),
        patient_id: bundle.patient_id().to_string(),
        values,
        windows,
        resolved_window,
    };
    let fhirpath = instantiate_query(template, &binding).map_err(|e| refuse(e.to_string()))?;
    let ctx = EvalContext::new(bundle).strict(true);
    let answer = execute_answer_in(&fhirpath, &ctx, template.response_type).map_err(|e| refuse(e.to_string()))?;
    let answerable = match template.response_type {
        ResponseType::Existence => true,
        ResponseType::Count => bundle.resources_of_type(&template.resource_type).next().is_some(),
        ResponseType::List => answer.as_array().is_some_and(|a| !a.is_empty()),
        ResponseType::Exact => true,
    };
    if !answerable {
        return Err(refuse(format!("no {} data to ask about", template.resource_type)));
    }
    Ok(Grounding {
        binding,
        fhirpath,
        answer,
    })
}

/// Distinct primitive values of `expression`, in evaluation order.
fn path_candidates(expression: &str, bundle: &PatientBundle) -> Result<Vec<String>, ForgeError> {
    let collection = evaluate(&parse(expression)?, &EvalContext::new(bundle))?;
    let mut out: Vec<String> = Vec::new();
    for v in collection.values() {
        let text = match v {
            FhirValue::String(s) => s.clone(),
            FhirValue::Integer(_) | FhirValue::Decimal(_) | FhirValue::Boolean(_) => v.to_canonical_string(),
            _ => continue,
        };
        if !text.is_empty() && !out.contains(&text) {
            out.push(text);
        }
    }
    Ok(out)
}

fn instantiate_query(template: &QuestionTemplate, binding: &SlotBinding) -> Result<String, ForgeError> {
    let query = substitute(&template.fhirpath_template, |p| match p.field {
        None => binding.values.get(p.name).map(|v| escape_string(v)),
        Some(field) => {
            let bounds = binding.windows.get(p.name)?;
            match field {
                "start" => Some(format_instant(&bounds.start)),
                "end" => Some(format_instant(&bounds.end)),
                _ => None,
            }
        }
    })
    .map_err(|missing| ForgeError::Substitution {
        template_id: template.template_id.clone(),
        missing,
    })?;
    validate_syntax(&query).map_err(|source| ForgeError::SyntaxRegression {
        template_id: template.template_id.clone(),
        query: query.clone(),
        source,
    })?;
    Ok(query)
}

/// Fills a paraphrase and the query template from one binding.
pub fn instantiate(
    template: &QuestionTemplate,
    binding: &SlotBinding,
    paraphrase: &ParaphraseCandidate,
) -> Result<(String, String), ForgeError> {
    let question = substitute(&paraphrase.text, |p| match (p.name, p.field) {
        (PATIENT_SLOT, None) => Some(binding.patient_id.clone()),
        (name, None) => binding.values.get(name).cloned(),
        _ => None,
    })
    .map_err(|missing| ForgeError::Substitution {
        template_id: template.template_id.clone(),
        missing,
    })?;
    Ok((question, instantiate_query(template, binding)?))
}
