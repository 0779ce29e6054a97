//! Paraphrase-level split assignment and template holdouts.

use std::collections::{BTreeMap, BTreeSet};

use super::dataset::{BenchmarkSample, Split};
use super::template::{Holdout, Registry};
use super::ForgeError;
use crate::digest::rank_key;
use crate::fhirpath::{tokenize, TokenKind};
use crate::paraphrase::Perspective;

pub const DEFAULT_RATIOS: [f64; 3] = [0.80, 0.08, 0.12];

/// Labels samples of holdout templates and moves them to test.
///
/// A sample that already carries a holdout label but sits outside test was
/// leaked by an earlier stage and is reported instead of silently fixed.
pub fn apply_holdouts(mut samples: Vec<BenchmarkSample>, registry: &Registry) -> Result<Vec<BenchmarkSample>, ForgeError> {
    for s in &mut samples {
        if s.holdout != Holdout::None && s.split != Split::Test {
            return Err(ForgeError::HoldoutLeak {
                sample_id: s.sample_id.clone(),
            });
        }
        let marked = registry.get(&s.template_id).map_or(Holdout::None, |t| t.holdout);
        if marked != Holdout::None {
            s.holdout = marked;
            s.split = Split::Test;
        }
    }
    Ok(samples)
}

/// Splits `n` items by `ratios` with largest-remainder rounding; ties go
/// to the earlier split.
pub fn allocate(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let total: f64 = ratios.iter().sum();
    let quotas = ratios.map(|r| r / total * n as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Assigns splits per paraphrase, stratified by (template, perspective).
/// Holdout samples keep their test split and are left out of the strata.
pub fn stratify_splits(mut samples: Vec<BenchmarkSample>, ratios: [f64; 3], master_seed: u64) -> Vec<BenchmarkSample> {
    let mut strata: BTreeMap<(String, Perspective), BTreeSet<String>> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.holdout == Holdout::None) {
        strata
            .entry((s.template_id.clone(), s.perspective))
            .or_default()
            .insert(s.paraphrase_id.clone());
    }
    let mut assignment: BTreeMap<String, Split> = BTreeMap::new();
    for ((template_id, perspective), ids) in strata {
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort_by_cached_key(|id| rank_key(master_seed, &["split", &template_id, perspective.as_str(), id]));
        let [train, val, _] = allocate(ids.len(), ratios);
        for (i, id) in ids.into_iter().enumerate() {
            let split = if i < train {
                Split::Train
            } else if i < train + val {
                Split::Val
            } else {
                Split::Test
            };
            assignment.insert(id, split);
        }
    }
    for s in samples.iter_mut().filter(|s| s.holdout == Holdout::None) {
        s.split = assignment[&s.paraphrase_id];
    }
    samples
}

/// Resource types held out by `unseen_resource` templates.
pub fn held_out_resources(registry: &Registry) -> BTreeSet<String> {
    registry
        .iter()
        .filter(|t| t.holdout == Holdout::UnseenResource)
        .map(|t| t.resource_type.clone())
        .collect()
}

/// Sample ids of train-split queries that mention a held-out resource type
/// as an identifier.
pub fn hygiene_violations<'s>(samples: &'s [BenchmarkSample], registry: &Registry) -> Vec<&'s str> {
    let held = held_out_resources(registry);
    samples
        .iter()
        .filter(|s| s.split == Split::Train)
        .filter(|s| {
            tokenize(&s.fhirpath).is_ok_and(|tokens| {
                tokens
                    .iter()
                    .any(|t| t.kind == TokenKind::Identifier && held.contains(&t.text))
            })
        })
        .map(|s| s.sample_id.as_str())
        .collect()
}
