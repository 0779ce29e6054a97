//! The three refinement stages: slot integrity, lexical diversity,
//! semantic alignment.

use std::collections::{BTreeMap, BTreeSet};

use super::distance::{cosine, levenshtein_capped};
use super::endpoints::Embedder;
use super::{FilterConfig, ParaphraseCandidate, ParaphraseError, Perspective};
use crate::forge::{QuestionTemplate, PATIENT_SLOT};
use crate::placeholder::{placeholders, substitute};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotViolation {
    pub missing: BTreeSet<String>,
    pub unknown: BTreeSet<String>,
    pub duplicated: BTreeSet<String>,
}

/// Placeholders a paraphrase must carry, each exactly once.
pub fn required_slots(template: &QuestionTemplate, perspective: Perspective) -> BTreeSet<String> {
    let mut slots = template.question_slots();
    if perspective == Perspective::Patient {
        slots.remove(PATIENT_SLOT);
    }
    slots
}

pub fn check_slot_integrity(template: &QuestionTemplate, candidate: &ParaphraseCandidate) -> Result<(), SlotViolation> {
    let required = required_slots(template, candidate.perspective);
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for p in placeholders(&candidate.text) {
        *seen.entry(p.key()).or_default() += 1;
    }
    let violation = SlotViolation {
        missing: required.iter().filter(|s| !seen.contains_key(*s)).cloned().collect(),
        unknown: seen.keys().filter(|s| !required.contains(*s)).cloned().collect(),
        duplicated: seen.iter().filter(|(_, n)| **n > 1).map(|(s, _)| s.clone()).collect(),
    };
    if violation == SlotViolation::default() {
        Ok(())
    } else {
        Err(violation)
    }
}

/// A candidate is dropped when it is too close, by either the absolute or
/// the normalized rule, to any earlier candidate, kept or not. Comparing
/// against all earlier candidates (rather than only kept ones) makes the
/// filter monotone: stricter thresholds only ever remove more.
pub fn lexical_filter(candidates: &[ParaphraseCandidate], config: &FilterConfig) -> Vec<ParaphraseCandidate> {
    candidates
        .iter()
        .enumerate()
        .filter(|(i, c)| !candidates[..*i].iter().any(|e| too_close(&e.text, &c.text, config)))
        .map(|(_, c)| c.clone())
        .collect()
}

/// Same decision as comparing `levenshtein` and `normalized_levenshtein`
/// with the thresholds. Both tests only get easier to pass as the distance
/// grows, so the DP can stop at the first distance that passes both.
fn too_close(a: &str, b: &str, config: &FilterConfig) -> bool {
    let longest = a.chars().count().max(b.chars().count());
    let cap = config.min_lev_abs.max((config.min_lev_norm * longest as f64).ceil() as usize + 1);
    let d = levenshtein_capped(a, b, cap);
    let normalized = if longest == 0 { 0.0 } else { d as f64 / longest as f64 };
    d < config.min_lev_abs || normalized < config.min_lev_norm
}

/// Replaces each `{slot}` with its bare name.
pub fn with_slot_names(text: &str) -> String {
    substitute(text, |p| Some(p.key())).expect("every placeholder maps to its name")
}

pub fn semantic_filter(
    candidates: &[ParaphraseCandidate],
    reference: &str,
    embedder: &dyn Embedder,
    config: &FilterConfig,
    perspective: Perspective,
) -> Result<Vec<ParaphraseCandidate>, ParaphraseError> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let mut texts = vec![with_slot_names(reference)];
    texts.extend(candidates.iter().map(|c| with_slot_names(&c.text)));
    let vectors = embedder.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(ParaphraseError::EmbedderUnavailable(format!(
            "{} vectors for {} texts",
            vectors.len(),
            texts.len()
        )));
    }
    let threshold = config.threshold(perspective);
    let (reference, rest) = vectors.split_first().expect("reference embedded");
    let mut kept = Vec::new();
    for (c, v) in candidates.iter().zip(rest) {
        if cosine(v, reference)? >= threshold {
            kept.push(c.clone());
        }
    }
    Ok(kept)
}
