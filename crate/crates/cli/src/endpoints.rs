//! Builds endpoints from `mock:`, `scripted:` and URL specs.

use std::path::PathBuf;

use fpqa_core::forge::BenchmarkSample;
use fpqa_core::harness::{Completion, ConstantCompletion, GoldCompletion, HttpCompletion, Pipeline, ScriptedCompletion};
use fpqa_core::paraphrase::{
    Embedder, GenerationRequest, Generator, HashingEmbedder, HttpEmbedder, HttpGenerator, ParaphraseError,
    ScriptedGenerator,
};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Spec {
    Mock(String),
    Scripted(PathBuf),
    Http(String),
}

pub fn parse(spec: &str) -> Result<Spec, UsageError> {
    if let Some(name) = spec.strip_prefix("mock:") {
        Ok(Spec::Mock(name.to_string()))
    } else if let Some(path) = spec.strip_prefix("scripted:") {
        Ok(Spec::Scripted(path.into()))
    } else if spec.starts_with("http://") || spec.starts_with("https://") {
        Ok(Spec::Http(spec.to_string()))
    } else {
        Err(UsageError(format!(
            "endpoint `{spec}`: expected mock:<name>, scripted:<file> or an http(s) URL"
        )))
    }
}

fn unknown_mock(kind: &str, name: &str, known: &str) -> anyhow::Error {
    UsageError(format!("unknown {kind} mock `{name}` (known: {known})")).into()
}

pub fn generator(spec: &str) -> anyhow::Result<Box<dyn Generator>> {
    Ok(match parse(spec)? {
        Spec::Mock(name) if name == "rephrase" => Box::new(RephraseGenerator),
        Spec::Mock(name) => return Err(unknown_mock("generation", &name, "rephrase")),
        Spec::Scripted(path) => Box::new(ScriptedGenerator::from_file(&path)?),
        Spec::Http(url) => Box::new(HttpGenerator::new(url)),
    })
}

pub fn embedder(spec: &str) -> anyhow::Result<Box<dyn Embedder>> {
    Ok(match parse(spec)? {
        Spec::Mock(name) if name == "hashing" => Box::new(HashingEmbedder::default()),
        Spec::Mock(name) => return Err(unknown_mock("embedding", &name, "hashing")),
        Spec::Scripted(path) => Err(UsageError(format!(
            "scripted embeddings are not supported ({}); use mock:hashing or a URL",
            path.display()
        )))?,
        Spec::Http(url) => Box::new(HttpEmbedder::new(url)),
    })
}

/// Mock completions need the dataset: `gold` echoes each sample's query or
/// answer, `invalid` always returns an unparseable query.
pub fn completion(spec: &str, pipeline: Pipeline, samples: &[BenchmarkSample]) -> anyhow::Result<Box<dyn Completion>> {
    Ok(match parse(spec)? {
        Spec::Mock(name) => match (name.as_str(), pipeline) {
            ("gold", Pipeline::QueryFirst) => Box::new(GoldCompletion::queries(samples)),
            ("gold", Pipeline::RetrievalFirst) => Box::new(GoldCompletion::answers(samples)),
            ("invalid", _) => Box::new(ConstantCompletion("```fhirpath\nPatient.where(\n```".into())),
            _ => return Err(unknown_mock("completion", &name, "gold, invalid")),
        },
        Spec::Scripted(path) => Box::new(ScriptedCompletion::from_file(&path)?),
        Spec::Http(url) => Box::new(HttpCompletion::new(url)),
    })
}

const FRAMES: [&str; 12] = [
    "",
    "Could you tell me this: ",
    "Looking through the chart, ",
    "Quick question about the record. ",
    "I would like to know the following. ",
    "According to the documented data, ",
    "Please answer from the stored notes: ",
    "Based on everything on file, ",
    "Help me check something: ",
    "From what has been recorded so far, ",
    "Here is what I want answered: ",
    "Going by the health history, ",
];

/// Offline stand-in for a paraphrasing model: wraps the question from the
/// prompt's `Question:` line in fixed lead-in phrases.
#[derive(Debug, Clone, Copy)]
pub struct RephraseGenerator;

impl Generator for RephraseGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, ParaphraseError> {
        let question = request
            .prompt
            .rsplit_once("Question:")
            .map(|(_, q)| q.trim())
            .filter(|q| !q.is_empty())
            .ok_or_else(|| ParaphraseError::MalformedGeneration("prompt has no `Question:` line".into()))?;
        Ok(FRAMES
            .iter()
            .cycle()
            .take(request.n)
            .enumerate()
            .map(|(i, frame)| match i / FRAMES.len() {
                0 => format!("{frame}{question}"),
                round => format!("{frame}{question} ({round})"),
            })
            .collect())
    }
}
