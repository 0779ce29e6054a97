//! Paraphrase generation and the integrity → lexical → semantic refinement.

mod distance;
mod endpoints;
mod filters;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub use distance::{cosine, levenshtein, normalized_levenshtein};
pub use endpoints::{
    Embedder, GenerationRequest, Generator, HashingEmbedder, HttpEmbedder, HttpGenerator, ScriptedEmbedder,
    ScriptedGenerator,
};
pub use filters::{check_slot_integrity, lexical_filter, required_slots, semantic_filter, with_slot_names, SlotViolation};

use crate::forge::{QuestionTemplate, Registry};

#[derive(Debug, thiserror::Error)]
pub enum ParaphraseError {
    #[error("generator unavailable: {0}")]
    GeneratorUnavailable(String),
    #[error("malformed generation: {0}")]
    MalformedGeneration(String),
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("prompt template {path}: {source}")]
    Prompt {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perspective {
    Clinician,
    Patient,
}

impl Perspective {
    pub const ALL: [Perspective; 2] = [Perspective::Clinician, Perspective::Patient];

    pub fn as_str(self) -> &'static str {
        match self {
            Perspective::Clinician => "clinician",
            Perspective::Patient => "patient",
        }
    }
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseCandidate {
    pub candidate_id: u32,
    pub template_id: String,
    pub perspective: Perspective,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_lev_abs: usize,
    pub min_lev_norm: f64,
    pub cos_threshold_clinician: f64,
    pub cos_threshold_patient: f64,
    pub paraphrases_per_template_per_perspective: usize,
    /// Sampling temperature sent to the generator.
    pub temperature: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_lev_abs: 10,
            min_lev_norm: 0.15,
            cos_threshold_clinician: 0.80,
            cos_threshold_patient: 0.70,
            paraphrases_per_template_per_perspective: 50,
            temperature: 1.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), ParaphraseError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.min_lev_norm) || !unit(self.cos_threshold_clinician) || !unit(self.cos_threshold_patient) {
            return Err(ParaphraseError::InvalidConfig("fractions must lie in [0, 1]".into()));
        }
        if self.cos_threshold_patient > self.cos_threshold_clinician {
            return Err(ParaphraseError::InvalidConfig(
                "patient threshold must not exceed the clinician threshold".into(),
            ));
        }
        Ok(())
    }

    pub fn threshold(&self, perspective: Perspective) -> f64 {
        match perspective {
            Perspective::Clinician => self.cos_threshold_clinician,
            Perspective::Patient => self.cos_threshold_patient,
        }
    }
}

/// The two prompt templates, each with a `{question}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompts {
    pub clinician: String,
    pub patient: String,
}

impl Prompts {
    /// Reads `paraphrase-clinician.txt` and `paraphrase-patient.txt`.
    pub fn load(dir: &Path) -> Result<Prompts, ParaphraseError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| ParaphraseError::Prompt {
                path: path.display().to_string(),
                source,
            })
        };
        Ok(Prompts {
            clinician: read("paraphrase-clinician.txt")?,
            patient: read("paraphrase-patient.txt")?,
        })
    }

    fn get(&self, perspective: Perspective) -> &str {
        match perspective {
            Perspective::Clinician => &self.clinician,
            Perspective::Patient => &self.patient,
        }
    }
}

/// First-person rewrites of the patient-id phrase, applied in order.
static PATIENT_ID_PHRASES: LazyLock<[(Regex, &str); 3]> = LazyLock::new(|| {
    let re = |p: &str| Regex::new(p).expect("static regex");
    [
        (re(r"\b(?:of|for)\s+(?:patient\s+)?\{patient_id\}"), "for me"),
        (re(r"\b(?:patient\s+)?\{patient_id\}'s"), "my"),
        (re(r"\b(?:patient\s+)?\{patient_id\}"), "I"),
    ]
});

/// The template question as seen from a perspective: the patient view
/// rewrites the patient-id phrase in the first person.
pub fn reference_question(template: &QuestionTemplate, perspective: Perspective) -> String {
    match perspective {
        Perspective::Clinician => template.question_text.clone(),
        Perspective::Patient => PATIENT_ID_PHRASES
            .iter()
            .fold(template.question_text.clone(), |q, (re, with)| re.replace_all(&q, *with).into_owned()),
    }
}

static LIST_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*•]|\d+[.)])\s+").expect("static regex"));

pub fn generate_paraphrases(
    template: &QuestionTemplate,
    perspective: Perspective,
    n: usize,
    generator: &dyn Generator,
    prompts: &Prompts,
    temperature: f64,
) -> Result<Vec<ParaphraseCandidate>, ParaphraseError> {
    let request = GenerationRequest {
        key: format!("{}/{}", template.template_id, perspective),
        prompt: prompts
            .get(perspective)
            .replace("{question}", &reference_question(template, perspective)),
        n,
        temperature,
    };
    let texts = generator.generate(&request)?;
    let lines: Vec<String> = texts
        .iter()
        .flat_map(|t| t.lines())
        .map(|l| LIST_MARKER.replace(l, "").trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(ParaphraseError::MalformedGeneration(format!(
            "`{}` produced no paraphrase lines",
            request.key
        )));
    }
    Ok(lines
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, text)| ParaphraseCandidate {
            candidate_id: i as u32,
            template_id: template.template_id.clone(),
            perspective,
            text,
        })
        .collect())
}

/// Survivors after each stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub generated: usize,
    pub slot_integrity: usize,
    pub lexical: usize,
    pub semantic: usize,
}

impl std::ops::AddAssign for StageCounts {
    fn add_assign(&mut self, o: StageCounts) {
        self.generated += o.generated;
        self.slot_integrity += o.slot_integrity;
        self.lexical += o.lexical;
        self.semantic += o.semantic;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttritionReport {
    pub per_perspective: BTreeMap<Perspective, StageCounts>,
    /// Keyed by `template_id/perspective`.
    pub per_template: BTreeMap<String, StageCounts>,
}

/// Generates and refines one (template, perspective) set.
pub fn refine(
    template: &QuestionTemplate,
    perspective: Perspective,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
    prompts: &Prompts,
    config: &FilterConfig,
) -> Result<(Vec<ParaphraseCandidate>, StageCounts), ParaphraseError> {
    let generated = generate_paraphrases(
        template,
        perspective,
        config.paraphrases_per_template_per_perspective,
        generator,
        prompts,
        config.temperature,
    )?;
    let intact: Vec<ParaphraseCandidate> = generated
        .iter()
        .filter(|c| check_slot_integrity(template, c).is_ok())
        .cloned()
        .collect();
    let diverse = lexical_filter(&intact, config);
    let aligned = semantic_filter(
        &diverse,
        &reference_question(template, perspective),
        embedder,
        config,
        perspective,
    )?;
    let counts = StageCounts {
        generated: generated.len(),
        slot_integrity: intact.len(),
        lexical: diverse.len(),
        semantic: aligned.len(),
    };
    Ok((aligned, counts))
}

/// Refines every template from both perspectives with at most `in_flight`
/// concurrent endpoint calls. Output order is (template_id, perspective,
/// candidate_id) regardless of scheduling.
pub fn refine_all(
    registry: &Registry,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
    prompts: &Prompts,
    config: &FilterConfig,
    in_flight: usize,
) -> Result<(Vec<ParaphraseCandidate>, AttritionReport), ParaphraseError> {
    config.validate()?;
    let jobs: Vec<(&QuestionTemplate, Perspective)> = registry
        .iter()
        .flat_map(|t| Perspective::ALL.map(|p| (t, p)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(in_flight.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|(t, p)| refine(t, *p, generator, embedder, prompts, config))
            .collect()
    });
    let mut kept = Vec::new();
    let mut report = AttritionReport::default();
    for ((t, p), result) in jobs.iter().zip(results) {
        let (survivors, counts) = result?;
        *report.per_perspective.entry(*p).or_default() += counts;
        report.per_template.insert(format!("{}/{}", t.template_id, p), counts);
        kept.extend(survivors);
    }
    Ok((kept, report))
}
