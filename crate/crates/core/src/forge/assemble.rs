//! Grounding paraphrases in patients to build both dataset tiers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{BenchmarkSample, Split, Tier};
use super::slots::{ground, instantiate, Grounding};
use super::template::{Holdout, QuestionTemplate, Registry};
use super::ForgeError;
use crate::digest::{hex_id, rank_key, seeded_rng, stable_digest};
use crate::paraphrase::{ParaphraseCandidate, Perspective};
use crate::store::PatientBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssembleConfig {
    /// Additional patients grounding each paraphrase in the large tier.
    pub large_patients_per_paraphrase: usize,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        AssembleConfig {
            large_patients_per_paraphrase: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedTemplate {
    pub template_id: String,
    pub error: String,
    /// Why each patient could not ground the template.
    pub reasons: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub skipped: Vec<SkippedTemplate>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembly {
    pub benchmark: Vec<BenchmarkSample>,
    pub large: Vec<BenchmarkSample>,
    pub skip_report: SkipReport,
}

/// `T1/c/007`: template, perspective initial, candidate id.
pub fn paraphrase_id(candidate: &ParaphraseCandidate) -> String {
    let p = match candidate.perspective {
        Perspective::Clinician => 'c',
        Perspective::Patient => 'p',
    };
    format!("{}/{p}/{:03}", candidate.template_id, candidate.candidate_id)
}

fn sample_id(patient_id: &str, template_id: &str, paraphrase_id: &str, grounding: &Grounding) -> String {
    let values = grounding
        .binding
        .values
        .iter()
        .map(|(k, v)| format!("{k}={v}"));
    let parts = [patient_id.to_string(), template_id.to_string(), paraphrase_id.to_string()]
        .into_iter()
        .chain(values);
    hex_id(&stable_digest(parts), 12)
}

/// Builds both tiers. Splits are provisional (`train`) and holdouts unset;
/// see [`super::apply_holdouts`] and [`super::stratify_splits`].
///
/// Each paraphrase orders patients by a seeded hash. The first patient that
/// grounds the template yields the benchmark sample; the next
/// `large_patients_per_paraphrase` yield large-tier samples.
pub fn assemble(
    patients: &[PatientBundle],
    registry: &Registry,
    paraphrases: &BTreeMap<(String, Perspective), Vec<ParaphraseCandidate>>,
    config: &AssembleConfig,
    master_seed: u64,
) -> Result<Assembly, ForgeError> {
    let mut assembly = Assembly::default();
    for template in registry.iter() {
        let groundings: Vec<(&PatientBundle, Result<Grounding, String>)> = patients
            .par_iter()
            .map(|b| {
                let mut rng = seeded_rng(master_seed, &[b.patient_id(), &template.template_id]);
                (b, ground(template, b, &mut rng).map_err(|e| e.reason))
            })
            .collect();
        let answerable: Vec<(&PatientBundle, &Grounding)> = groundings
            .iter()
            .filter_map(|(b, g)| Some((*b, g.as_ref().ok()?)))
            .collect();
        if answerable.is_empty() {
            let reasons = groundings
                .iter()
                .filter_map(|(b, g)| Some((b.patient_id().to_string(), g.as_ref().err()?.clone())))
                .collect();
            assembly.skip_report.skipped.push(SkippedTemplate {
                template_id: template.template_id.clone(),
                error: ForgeError::InsufficientPatients {
                    template_id: template.template_id.clone(),
                }
                .to_string(),
                reasons,
            });
            continue;
        }
        for perspective in Perspective::ALL {
            let Some(set) = paraphrases.get(&(template.template_id.clone(), perspective)) else {
                continue;
            };
            for candidate in set {
                emit(template, candidate, &answerable, config, master_seed, &mut assembly)?;
            }
        }
    }
    assembly.benchmark.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    assembly.large.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(assembly)
}

fn emit(
    template: &QuestionTemplate,
    candidate: &ParaphraseCandidate,
    answerable: &[(&PatientBundle, &Grounding)],
    config: &AssembleConfig,
    master_seed: u64,
    assembly: &mut Assembly,
) -> Result<(), ForgeError> {
    let pid = paraphrase_id(candidate);
    let mut order: Vec<&(&PatientBundle, &Grounding)> = answerable.iter().collect();
    order.sort_by_cached_key(|(b, _)| rank_key(master_seed, &[&pid, b.patient_id()]));
    for (rank, (bundle, grounding)) in order.into_iter().take(1 + config.large_patients_per_paraphrase).enumerate() {
        let (question, fhirpath) = instantiate(template, &grounding.binding, candidate)?;
        let tier = if rank == 0 { Tier::Benchmark } else { Tier::Large };
        let sample = BenchmarkSample {
            sample_id: sample_id(bundle.patient_id(), &template.template_id, &pid, grounding),
            patient_id: bundle.patient_id().to_string(),
            template_id: template.template_id.clone(),
            perspective: candidate.perspective,
            paraphrase_id: pid.clone(),
            question,
            fhirpath,
            answer_type: template.response_type,
            answer: (tier == Tier::Benchmark).then(|| grounding.answer.clone()),
            split: Split::Train,
            holdout: Holdout::None,
            tier,
        };
        match tier {
            Tier::Benchmark => assembly.benchmark.push(sample),
            Tier::Large => assembly.large.push(sample),
        }
    }
    Ok(())
}
