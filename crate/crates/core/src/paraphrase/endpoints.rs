//! Text-generation and embedding endpoints.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ParaphraseError;
use crate::digest::stable_digest;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRequest {
    /// `template_id/perspective`; scripted generators look responses up by it.
    #[serde(skip)]
    pub key: String,
    pub prompt: String,
    pub n: usize,
    pub temperature: f64,
}

pub trait Generator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, ParaphraseError>;
}

pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ParaphraseError>;
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .new_agent()
}

/// POSTs `{"prompt","n","temperature"}` and expects `{"texts": [...]}`.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    url: String,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>) -> Self {
        HttpGenerator { url: url.into() }
    }
}

#[derive(Deserialize)]
struct TextsResponse {
    texts: Vec<String>,
}

impl Generator for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, ParaphraseError> {
        let unavailable = |e: String| ParaphraseError::GeneratorUnavailable(format!("{}: {e}", self.url));
        let mut resp = agent()
            .post(&self.url)
            .send_json(request)
            .map_err(|e| unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status())));
        }
        let body: TextsResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| ParaphraseError::MalformedGeneration(e.to_string()))?;
        Ok(body.texts)
    }
}

/// Replays generations from a JSON object keyed by request key, with an
/// optional `"default"` entry.
#[derive(Debug, Clone, Default)]
pub struct ScriptedGenerator {
    responses: BTreeMap<String, Vec<String>>,
}

impl ScriptedGenerator {
    pub fn new(responses: BTreeMap<String, Vec<String>>) -> Self {
        ScriptedGenerator { responses }
    }

    pub fn from_file(path: &Path) -> Result<Self, ParaphraseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParaphraseError::GeneratorUnavailable(format!("{}: {e}", path.display())))?;
        let responses = serde_json::from_str(&text)
            .map_err(|e| ParaphraseError::GeneratorUnavailable(format!("{}: {e}", path.display())))?;
        Ok(ScriptedGenerator { responses })
    }
}

impl Generator for ScriptedGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, ParaphraseError> {
        self.responses
            .get(&request.key)
            .or_else(|| self.responses.get("default"))
            .cloned()
            .ok_or_else(|| ParaphraseError::GeneratorUnavailable(format!("no scripted response for `{}`", request.key)))
    }
}

/// POSTs `{"texts": [...]}` and expects `{"vectors": [[...], ...]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    url: String,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>) -> Self {
        HttpEmbedder { url: url.into() }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl Embedder for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ParaphraseError> {
        let unavailable = |e: String| ParaphraseError::EmbedderUnavailable(format!("{}: {e}", self.url));
        let mut resp = agent()
            .post(&self.url)
            .send_json(EmbedRequest { texts })
            .map_err(|e| unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status())));
        }
        let body: EmbedResponse = resp.body_mut().read_json().map_err(|e| unavailable(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(unavailable(format!("{} vectors for {} texts", body.vectors.len(), texts.len())));
        }
        Ok(body.vectors)
    }
}

/// Offline embedder: signed feature hashing of lowercased word tokens.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dims: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dims: 256 }
    }
}

impl HashingEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dims];
        let lower = text.to_lowercase();
        for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let d = stable_digest([token]);
            let idx = u64::from_le_bytes(d[..8].try_into().expect("8 bytes")) as usize % self.dims;
            v[idx] += if d[8] & 1 == 0 { 1.0 } else { -1.0 };
        }
        v
    }
}

impl Embedder for HashingEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ParaphraseError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Fixed vectors per exact text; unknown texts are an error.
#[derive(Debug, Clone, Default)]
pub struct ScriptedEmbedder {
    vectors: BTreeMap<String, Vec<f64>>,
}

impl ScriptedEmbedder {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>) -> Self {
        ScriptedEmbedder { vectors }
    }
}

impl Embedder for ScriptedEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ParaphraseError> {
        texts
            .iter()
            .map(|t| {
                self.vectors
                    .get(t)
                    .cloned()
                    .ok_or_else(|| ParaphraseError::EmbedderUnavailable(format!("no scripted vector for {t:?}")))
            })
            .collect()
    }
}
