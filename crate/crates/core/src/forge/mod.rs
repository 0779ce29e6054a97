//! Benchmark synthesis: templates, slot grounding, assembly, splits.

mod answer;
mod assemble;
mod dataset;
mod slots;
mod splits;
mod template;
mod window;

use std::collections::BTreeMap;

pub use answer::{canonical_value, execute_answer, execute_answer_in, project};
pub use assemble::{assemble, paraphrase_id, AssembleConfig, Assembly, SkipReport, SkippedTemplate};
pub use dataset::{read_jsonl, sft_examples, write_jsonl, BenchmarkSample, SftExample, Split, Tier, SFT_PREAMBLE};
pub use slots::{ground, instantiate, sample_slots, Grounding, NotAnswerable, SlotBinding};
pub use splits::{
    allocate, apply_holdouts, held_out_resources, hygiene_violations, stratify_splits, DEFAULT_RATIOS,
};
pub use template::{load_templates, Holdout, QuestionTemplate, Registry, ResponseType, Sampler, SlotSpec, PATIENT_SLOT};
pub use window::{Bounds, DateWindow};

use serde::{Deserialize, Serialize};

use crate::fhirpath::EngineError;
use crate::paraphrase::{ParaphraseCandidate, Perspective};
use crate::store::PatientBundle;

#[derive(Debug, thiserror::Error)]
pub enum ForgeError {
    #[error("malformed template `{template_id}`: {reason}")]
    MalformedTemplate { template_id: String, reason: String },
    #[error("template `{template_id}`: unfilled placeholders {missing:?}")]
    Substitution { template_id: String, missing: Vec<String> },
    #[error("template `{template_id}`: substituted query does not parse ({source}): {query}")]
    SyntaxRegression {
        template_id: String,
        query: String,
        #[source]
        source: EngineError,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("expected a {expected:?} result, found {found}")]
    ProjectionMismatch { expected: ResponseType, found: String },
    #[error("template `{template_id}` is answerable for no patient")]
    InsufficientPatients { template_id: String },
    #[error("holdout sample `{sample_id}` is outside the test split")]
    HoldoutLeak { sample_id: String },
    #[error("line {line}: {reason}")]
    SchemaViolation { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForgeConfig {
    #[serde(flatten)]
    pub assemble: AssembleConfig,
    pub split_ratios: [f64; 3],
}

impl Default for ForgeConfig {
    fn default() -> Self {
        ForgeConfig {
            assemble: AssembleConfig::default(),
            split_ratios: DEFAULT_RATIOS,
        }
    }
}

/// Groups a flat paraphrase list by (template, perspective), keeping order.
pub fn group_paraphrases(
    candidates: impl IntoIterator<Item = ParaphraseCandidate>,
) -> BTreeMap<(String, Perspective), Vec<ParaphraseCandidate>> {
    let mut sets: BTreeMap<(String, Perspective), Vec<ParaphraseCandidate>> = BTreeMap::new();
    for c in candidates {
        sets.entry((c.template_id.clone(), c.perspective)).or_default().push(c);
    }
    sets
}

/// Assembly followed by holdouts and stratified splits over both tiers, so
/// a paraphrase lands in one split across tiers.
pub fn forge(
    patients: &[PatientBundle],
    registry: &Registry,
    paraphrases: &BTreeMap<(String, Perspective), Vec<ParaphraseCandidate>>,
    config: &ForgeConfig,
    master_seed: u64,
) -> Result<Assembly, ForgeError> {
    let assembly = assemble(patients, registry, paraphrases, &config.assemble, master_seed)?;
    let n_benchmark = assembly.benchmark.len();
    let all: Vec<BenchmarkSample> = assembly.benchmark.into_iter().chain(assembly.large).collect();
    let all = apply_holdouts(all, registry)?;
    let mut all = stratify_splits(all, config.split_ratios, master_seed);
    let large = all.split_off(n_benchmark);
    Ok(Assembly {
        benchmark: all,
        large,
        skip_report: assembly.skip_report,
    })
}
