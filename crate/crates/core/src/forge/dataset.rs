//! Dataset records and their JSONL form.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::template::{Holdout, ResponseType};
use super::ForgeError;
use crate::paraphrase::Perspective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Executed question–query–answer triples.
    Benchmark,
    /// Question–query pairs without answers.
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSample {
    pub sample_id: String,
    pub patient_id: String,
    pub template_id: String,
    pub perspective: Perspective,
    pub paraphrase_id: String,
    pub question: String,
    pub fhirpath: String,
    pub answer_type: ResponseType,
    pub answer: Option<Value>,
    pub split: Split,
    pub holdout: Holdout,
    pub tier: Tier,
}

const FIELDS: [&str; 12] = [
    "sample_id",
    "patient_id",
    "template_id",
    "perspective",
    "paraphrase_id",
    "question",
    "fhirpath",
    "answer_type",
    "answer",
    "split",
    "holdout",
    "tier",
];

impl BenchmarkSample {
    /// Ordering key of emitted datasets.
    pub fn sort_key(&self) -> (&str, &str, &str) {
        (&self.patient_id, &self.template_id, &self.paraphrase_id)
    }
}

pub fn write_jsonl(samples: &[BenchmarkSample], mut out: impl Write) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl(input: impl BufRead) -> Result<Vec<BenchmarkSample>, ForgeError> {
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let violation = |reason: String| ForgeError::SchemaViolation { line: line_no, reason };
        let line = line.map_err(|e| violation(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: Value = serde_json::from_str(&line).map_err(|e| violation(e.to_string()))?;
        let Some(obj) = raw.as_object() else {
            return Err(violation("not a JSON object".into()));
        };
        if let Some(missing) = FIELDS.iter().find(|f| !obj.contains_key(**f)) {
            return Err(violation(format!("missing field `{missing}`")));
        }
        let sample: BenchmarkSample = serde_json::from_value(raw).map_err(|e| violation(e.to_string()))?;
        match (sample.tier, &sample.answer) {
            (Tier::Benchmark, None) => return Err(violation("benchmark-tier sample without an answer".into())),
            (Tier::Large, Some(_)) => return Err(violation("large-tier sample with an answer".into())),
            _ => {}
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Fixed instruction prepended to every SFT prompt.
pub const SFT_PREAMBLE: &str = "Write one FHIRPath expression that answers the question when evaluated over the \
patient's FHIR R4 bundle. Reply with the expression only.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub prompt: String,
    pub completion: String,
}

/// Training pairs: large tier, train split, no holdout.
pub fn sft_examples(samples: &[BenchmarkSample]) -> Vec<SftExample> {
    samples
        .iter()
        .filter(|s| s.tier == Tier::Large && s.split == Split::Train && s.holdout == Holdout::None)
        .map(|s| SftExample {
            prompt: format!("{SFT_PREAMBLE}\n\n{}", s.question),
            completion: s.fhirpath.clone(),
        })
        .collect()
}
