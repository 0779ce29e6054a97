//! Completion endpoints: the HTTP wire contract and offline mocks.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::score::render_answer;
use super::tokens::estimate_tokens;
use super::HarnessError;
use crate::forge::BenchmarkSample;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    #[serde(skip)]
    pub sample_id: String,
    pub system: String,
    pub prompt: String,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn estimated_prompt_tokens(&self) -> u64 {
        estimate_tokens(&self.system) + estimate_tokens(&self.prompt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionStatus {
    Ok,
    ContextOverflow,
    TransportError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub status: CompletionStatus,
}

impl CompletionResult {
    /// Usage from the estimator, for endpoints that report none.
    pub fn estimated(request: &CompletionRequest, text: String) -> Self {
        CompletionResult {
            completion_tokens: estimate_tokens(&text),
            prompt_tokens: request.estimated_prompt_tokens(),
            text,
            status: CompletionStatus::Ok,
        }
    }

    fn failed(request: &CompletionRequest, status: CompletionStatus, detail: String) -> Self {
        CompletionResult {
            text: detail,
            prompt_tokens: request.estimated_prompt_tokens(),
            completion_tokens: 0,
            status,
        }
    }
}

pub trait Completion: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> CompletionResult;
}

/// POSTs `{"system","prompt","max_tokens"}`; expects `{"text","usage"}`.
/// HTTP 413 is a context overflow; other failures are transport errors.
#[derive(Debug, Clone)]
pub struct HttpCompletion {
    url: String,
}

impl HttpCompletion {
    pub fn new(url: impl Into<String>) -> Self {
        HttpCompletion { url: url.into() }
    }
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

#[derive(Deserialize)]
struct CompletionBody {
    text: String,
    usage: Option<Usage>,
}

impl Completion for HttpCompletion {
    fn complete(&self, request: &CompletionRequest) -> CompletionResult {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .new_agent();
        let mut resp = match agent.post(&self.url).send_json(request) {
            Ok(r) => r,
            Err(e) => return CompletionResult::failed(request, CompletionStatus::TransportError, e.to_string()),
        };
        match resp.status().as_u16() {
            413 => return CompletionResult::failed(request, CompletionStatus::ContextOverflow, "HTTP 413".into()),
            s if !(200..300).contains(&s) => {
                return CompletionResult::failed(request, CompletionStatus::TransportError, format!("HTTP {s}"))
            }
            _ => {}
        }
        match resp.body_mut().read_json::<CompletionBody>() {
            Ok(CompletionBody { text, usage: Some(u) }) => CompletionResult {
                text,
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
                status: CompletionStatus::Ok,
            },
            Ok(CompletionBody { text, usage: None }) => CompletionResult::estimated(request, text),
            Err(e) => CompletionResult::failed(request, CompletionStatus::TransportError, e.to_string()),
        }
    }
}

/// Replays completions from a JSON object keyed by sample id. Values are
/// either a string or `{"text": ..., "usage": {...}}`; a `"default"` entry
/// covers unlisted samples.
#[derive(Debug, Clone, Default)]
pub struct ScriptedCompletion {
    responses: BTreeMap<String, Value>,
}

impl ScriptedCompletion {
    pub fn new(responses: BTreeMap<String, Value>) -> Self {
        ScriptedCompletion { responses }
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let unavailable = |e: String| HarnessError::EndpointUnavailable(format!("{}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| unavailable(e.to_string()))?;
        let responses = serde_json::from_str(&text).map_err(|e| unavailable(e.to_string()))?;
        Ok(ScriptedCompletion { responses })
    }
}

impl Completion for ScriptedCompletion {
    fn complete(&self, request: &CompletionRequest) -> CompletionResult {
        let entry = self
            .responses
            .get(&request.sample_id)
            .or_else(|| self.responses.get("default"));
        match entry {
            Some(Value::String(text)) => CompletionResult::estimated(request, text.clone()),
            Some(obj @ Value::Object(_)) => match serde_json::from_value::<CompletionBody>(obj.clone()) {
                Ok(CompletionBody { text, usage: Some(u) }) => CompletionResult {
                    text,
                    prompt_tokens: u.prompt_tokens,
                    completion_tokens: u.completion_tokens,
                    status: CompletionStatus::Ok,
                },
                Ok(CompletionBody { text, usage: None }) => CompletionResult::estimated(request, text),
                Err(e) => CompletionResult::failed(request, CompletionStatus::TransportError, e.to_string()),
            },
            _ => CompletionResult::failed(
                request,
                CompletionStatus::TransportError,
                format!("no scripted completion for `{}`", request.sample_id),
            ),
        }
    }
}

/// Answers every request with the same text.
#[derive(Debug, Clone)]
pub struct ConstantCompletion(pub String);

impl Completion for ConstantCompletion {
    fn complete(&self, request: &CompletionRequest) -> CompletionResult {
        CompletionResult::estimated(request, self.0.clone())
    }
}

/// Returns each sample's gold query (query-first) or its gold answer after
/// an `Answer:` marker (retrieval-first).
#[derive(Debug, Clone, Default)]
pub struct GoldCompletion {
    by_sample: BTreeMap<String, String>,
}

impl GoldCompletion {
    pub fn queries(samples: &[BenchmarkSample]) -> Self {
        GoldCompletion {
            by_sample: samples
                .iter()
                .map(|s| (s.sample_id.clone(), format!("```fhirpath\n{}\n```", s.fhirpath)))
                .collect(),
        }
    }

    pub fn answers(samples: &[BenchmarkSample]) -> Self {
        GoldCompletion {
            by_sample: samples
                .iter()
                .filter_map(|s| Some((s.sample_id.clone(), format!("Answer: {}", render_answer(s.answer.as_ref()?)))))
                .collect(),
        }
    }
}

impl Completion for GoldCompletion {
    fn complete(&self, request: &CompletionRequest) -> CompletionResult {
        match self.by_sample.get(&request.sample_id) {
            Some(text) => CompletionResult::estimated(request, text.clone()),
            None => CompletionResult::failed(request, CompletionStatus::TransportError, "unknown sample".into()),
        }
    }
}
