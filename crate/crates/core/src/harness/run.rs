//! The two QA architectures.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::endpoints::{Completion, CompletionRequest, CompletionStatus};
use super::extract::{extract_answer, extract_query};
use super::score::score_exact_match;
use super::{EvalRecord, HarnessConfig, HarnessError, HarnessPrompts, Outcome, Pipeline, Selector};
use crate::fhirpath::validate_syntax;
use crate::forge::{execute_answer, BenchmarkSample, Registry, Tier};
use crate::store::{PatientBundle, Resource};

fn bundle_for<'b>(
    bundles: &'b BTreeMap<String, PatientBundle>,
    sample: &BenchmarkSample,
) -> Result<&'b PatientBundle, HarnessError> {
    bundles
        .get(&sample.patient_id)
        .ok_or_else(|| HarnessError::MissingBundle(sample.patient_id.clone()))
}

fn benchmark_only(samples: &[BenchmarkSample]) -> Vec<&BenchmarkSample> {
    samples
        .iter()
        .filter(|s| s.tier == Tier::Benchmark && s.answer.is_some())
        .collect()
}

/// Runs `f` per sample on a pool of `in_flight` threads; records come back
/// ordered by sample id.
fn run_each<F>(samples: Vec<&BenchmarkSample>, in_flight: usize, f: F) -> Result<Vec<EvalRecord>, HarnessError>
where
    F: Fn(&BenchmarkSample) -> Result<EvalRecord, HarnessError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(in_flight.max(1))
        .build()
        .expect("thread pool");
    let mut records = pool.install(|| samples.par_iter().map(|s| f(s)).collect::<Result<Vec<_>, _>>())?;
    records.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(records)
}

/// The model sees only the question and writes a FHIRPath query, which is
/// executed against the patient's bundle.
pub fn run_query_first(
    samples: &[BenchmarkSample],
    completion: &dyn Completion,
    bundles: &BTreeMap<String, PatientBundle>,
    prompts: &HarnessPrompts,
    config: &HarnessConfig,
) -> Result<Vec<EvalRecord>, HarnessError> {
    run_each(benchmark_only(samples), config.in_flight, |sample| {
        let bundle = bundle_for(bundles, sample)?;
        let request = CompletionRequest {
            sample_id: sample.sample_id.clone(),
            system: prompts.query_first_system.clone(),
            prompt: sample.question.clone(),
            max_tokens: config.max_tokens,
        };
        let result = completion.complete(&request);
        let record = |prediction: Option<String>, outcome| EvalRecord {
            sample_id: sample.sample_id.clone(),
            pipeline: Pipeline::QueryFirst,
            prediction,
            outcome,
            prompt_tokens: result.prompt_tokens,
            completion_tokens: result.completion_tokens,
        };
        if result.status != CompletionStatus::Ok {
            return Ok(record(None, Outcome::FailureTransport));
        }
        let Some(query) = extract_query(&result.text) else {
            return Ok(record(None, Outcome::FailureSyntax));
        };
        if validate_syntax(&query).is_err() {
            return Ok(record(Some(query), Outcome::FailureSyntax));
        }
        let gold = sample.answer.as_ref().expect("benchmark samples carry answers");
        let outcome = match execute_answer(&query, bundle, sample.answer_type) {
            Ok(answer) if answer.to_string() == gold.to_string() => Outcome::Correct,
            _ => Outcome::Incorrect,
        };
        Ok(record(Some(query), outcome))
    })
}

fn select<'b>(
    bundle: &'b PatientBundle,
    sample: &BenchmarkSample,
    registry: &Registry,
    selector: Selector,
) -> Vec<&'b Resource> {
    if selector == Selector::ResourceType {
        if let Some(t) = registry.get(&sample.template_id) {
            let picked: Vec<&Resource> = bundle
                .resources()
                .iter()
                .filter(|r| r.resource_type() == t.resource_type)
                .collect();
            if !picked.is_empty() {
                return picked;
            }
        }
    }
    bundle.resources().iter().collect()
}

/// Builds the retrieval-first prompt: selected resources as canonical
/// NDJSON followed by the question.
pub fn retrieval_prompt(resources: &[&Resource], question: &str) -> String {
    let mut prompt = String::from("Patient resources (one JSON object per line):\n");
    for r in resources {
        prompt.push_str(&r.root().to_canonical_string());
        prompt.push('\n');
    }
    prompt.push_str("\nQuestion: ");
    prompt.push_str(question);
    prompt
}

/// The model reads raw resources and answers directly.
pub fn run_retrieval_first(
    samples: &[BenchmarkSample],
    completion: &dyn Completion,
    bundles: &BTreeMap<String, PatientBundle>,
    registry: &Registry,
    prompts: &HarnessPrompts,
    config: &HarnessConfig,
) -> Result<Vec<EvalRecord>, HarnessError> {
    run_each(benchmark_only(samples), config.in_flight, |sample| {
        let bundle = bundle_for(bundles, sample)?;
        let resources = select(bundle, sample, registry, config.selector);
        let request = CompletionRequest {
            sample_id: sample.sample_id.clone(),
            system: prompts.retrieval_system.clone(),
            prompt: retrieval_prompt(&resources, &sample.question),
            max_tokens: config.max_tokens,
        };
        let attempted = request.estimated_prompt_tokens();
        let overflow = EvalRecord {
            sample_id: sample.sample_id.clone(),
            pipeline: Pipeline::RetrievalFirst,
            prediction: None,
            outcome: Outcome::FailureContextOverflow,
            prompt_tokens: attempted,
            completion_tokens: 0,
        };
        if attempted > config.context_limit_tokens {
            return Ok(overflow);
        }
        let result = completion.complete(&request);
        let outcome = match result.status {
            CompletionStatus::ContextOverflow => {
                return Ok(EvalRecord {
                    prompt_tokens: result.prompt_tokens,
                    ..overflow
                })
            }
            CompletionStatus::TransportError => Outcome::FailureTransport,
            CompletionStatus::Ok => {
                let gold = sample.answer.as_ref().expect("benchmark samples carry answers");
                match extract_answer(&result.text) {
                    Some(a) if score_exact_match(&a, gold, sample.answer_type) => Outcome::Correct,
                    _ => Outcome::Incorrect,
                }
            }
        };
        Ok(EvalRecord {
            sample_id: sample.sample_id.clone(),
            pipeline: Pipeline::RetrievalFirst,
            prediction: (outcome != Outcome::FailureTransport)
                .then(|| extract_answer(&result.text))
                .flatten(),
            outcome,
            prompt_tokens: result.prompt_tokens,
            completion_tokens: result.completion_tokens,
        })
    })
}
