//! Evaluation of query-first and retrieval-first question answering.
//!
//! Query-first: the model writes FHIRPath from the question alone and the
//! engine executes it. Retrieval-first: the model reads serialized
//! resources and answers in free text, scored by normalized exact match.

mod endpoints;
mod extract;
mod metrics;
mod run;
mod score;
mod tokens;

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use endpoints::{
    Completion, CompletionRequest, CompletionResult, CompletionStatus, ConstantCompletion, GoldCompletion,
    HttpCompletion, ScriptedCompletion,
};
pub use extract::{extract_answer, extract_query};
pub use metrics::{compute_metrics, mean_sd, GroupMetrics, Report, TokenSummary, CSV_HEADER};
pub use run::{retrieval_prompt, run_query_first, run_retrieval_first};
pub use score::{render_answer, score_exact_match};
pub use tokens::estimate_tokens;

use crate::paraphrase::Perspective;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("no bundle for patient `{0}`")]
    MissingBundle(String),
    #[error("record for unknown sample `{0}`")]
    UnknownSample(String),
    #[error("no records for {pipeline} / {perspective}")]
    EmptyGroup { pipeline: Pipeline, perspective: Perspective },
    #[error("completion endpoint unavailable: {0}")]
    EndpointUnavailable(String),
    #[error("prompt template {path}: {source}")]
    Prompt {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("records line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    QueryFirst,
    RetrievalFirst,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::QueryFirst => "query_first",
            Pipeline::RetrievalFirst => "retrieval_first",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pipeline::QueryFirst => "Query-first",
            Pipeline::RetrievalFirst => "Retrieval-first",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    FailureSyntax,
    FailureContextOverflow,
    FailureTransport,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        !matches!(self, Outcome::Correct | Outcome::Incorrect)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sample_id: String,
    pub pipeline: Pipeline,
    pub prediction: Option<String>,
    pub outcome: Outcome,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl EvalRecord {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Which resources the retrieval-first prompt carries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// Resources of the template's type, or the whole bundle if none.
    #[default]
    ResourceType,
    WholeBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub context_limit_tokens: u64,
    pub max_tokens: u32,
    pub in_flight: usize,
    pub selector: Selector,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            context_limit_tokens: 128_000,
            max_tokens: 512,
            in_flight: 4,
            selector: Selector::ResourceType,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessPrompts {
    pub query_first_system: String,
    pub retrieval_system: String,
}

impl HarnessPrompts {
    /// Reads `query-first-system.txt` and `retrieval-first-system.txt`.
    pub fn load(dir: &Path) -> Result<HarnessPrompts, HarnessError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| HarnessError::Prompt {
                path: path.display().to_string(),
                source,
            })
        };
        Ok(HarnessPrompts {
            query_first_system: read("query-first-system.txt")?,
            retrieval_system: read("retrieval-first-system.txt")?,
        })
    }
}

pub fn write_records(records: &[EvalRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_records(input: impl BufRead) -> Result<Vec<EvalRecord>, HarnessError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| HarnessError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
