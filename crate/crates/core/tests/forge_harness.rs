mod support;

use std::collections::BTreeSet;

use fpqa_core::forge::{self, execute_answer, ForgeConfig, Holdout, Split, Tier};
use fpqa_core::harness::{
    compute_metrics, run_query_first, run_retrieval_first, ConstantCompletion, GoldCompletion, HarnessConfig,
    HarnessPrompts, Pipeline,
};
use fpqa_core::Perspective;

const SEED: u64 = 42;

fn forged(per_stratum: usize) -> forge::Assembly {
    let registry = support::starter_registry();
    let paraphrases = support::synthetic_paraphrases(&registry, per_stratum);
    forge::forge(&support::minis(), &registry, &paraphrases, &ForgeConfig::default(), SEED).unwrap()
}

fn prompts() -> HarnessPrompts {
    HarnessPrompts::load(&support::workspace_root().join("prompts")).unwrap()
}

#[test]
fn every_benchmark_answer_re_executes() {
    let assembly = forged(4);
    let bundles = support::bundle_map(support::minis());
    assert!(assembly.skip_report.skipped.is_empty(), "{:?}", assembly.skip_report);
    assert_eq!(assembly.benchmark.len(), 20 * 2 * 4);
    for s in &assembly.benchmark {
        assert_eq!(s.tier, Tier::Benchmark);
        let fresh = execute_answer(&s.fhirpath, &bundles[&s.patient_id], s.answer_type).unwrap();
        assert_eq!(Some(&fresh), s.answer.as_ref(), "{}", s.sample_id);
    }
    assert!(assembly.large.iter().all(|s| s.tier == Tier::Large && s.answer.is_none()));
}

#[test]
fn forge_is_deterministic_and_jsonl_round_trips() {
    let a = forged(3);
    let b = forged(3);
    assert_eq!(a, b);
    let mut buf = Vec::new();
    forge::write_jsonl(&a.benchmark, &mut buf).unwrap();
    assert_eq!(forge::read_jsonl(buf.as_slice()).unwrap(), a.benchmark);
    let mut large = Vec::new();
    forge::write_jsonl(&a.large, &mut large).unwrap();
    assert_eq!(forge::read_jsonl(large.as_slice()).unwrap(), a.large);
}

#[test]
fn splits_respect_holdouts_and_paraphrase_grouping() {
    let assembly = forged(10);
    let registry = support::starter_registry();
    let all: Vec<_> = assembly.benchmark.iter().chain(&assembly.large).cloned().collect();
    assert!(forge::hygiene_violations(&all, &registry).is_empty());
    for s in &all {
        if s.holdout != Holdout::None {
            assert_eq!(s.split, Split::Test);
        }
        let marked = registry.get(&s.template_id).unwrap().holdout;
        assert_eq!(s.holdout, marked);
    }
    let mut splits_of = std::collections::BTreeMap::<&str, BTreeSet<Split>>::new();
    for s in &all {
        splits_of.entry(&s.paraphrase_id).or_default().insert(s.split);
    }
    assert!(splits_of.values().all(|s| s.len() == 1));
}

#[test]
fn gold_echo_is_perfect_on_both_pipelines() {
    let assembly = forged(2);
    let registry = support::starter_registry();
    let bundles = support::bundle_map(support::minis());
    let config = HarnessConfig::default();
    let samples = &assembly.benchmark;
    let mut records = run_query_first(samples, &GoldCompletion::queries(samples), &bundles, &prompts(), &config).unwrap();
    records.extend(
        run_retrieval_first(samples, &GoldCompletion::answers(samples), &bundles, &registry, &prompts(), &config)
            .unwrap(),
    );
    let report = compute_metrics(&records, samples).unwrap();
    for pipeline in [Pipeline::QueryFirst, Pipeline::RetrievalFirst] {
        for perspective in Perspective::ALL {
            let g = report.group(pipeline, perspective).unwrap();
            assert_eq!(g.accuracy, 1.0, "{pipeline} {perspective}");
            assert_eq!(g.failures, 0);
        }
    }
}

#[test]
fn always_invalid_query_fails_everything() {
    let assembly = forged(2);
    let bundles = support::bundle_map(support::minis());
    let invalid = ConstantCompletion("Patient.where(".into());
    let records = run_query_first(&assembly.benchmark, &invalid, &bundles, &prompts(), &HarnessConfig::default()).unwrap();
    let report = compute_metrics(&records, &assembly.benchmark).unwrap();
    for g in &report.groups {
        assert_eq!(g.failure_rate, 1.0);
        assert_eq!(g.accuracy, 0.0);
        assert_eq!(g.accuracy_excl_failures, None);
    }
}
