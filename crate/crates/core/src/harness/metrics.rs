//! Aggregate metrics and the Table-3/Table-4 style report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvalRecord, HarnessError, Outcome, Pipeline};
use crate::forge::BenchmarkSample;
use crate::paraphrase::Perspective;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub pipeline: Pipeline,
    pub perspective: Perspective,
    pub n: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub failures: usize,
    pub accuracy: f64,
    pub failure_rate: f64,
    /// `None` when every attempt failed.
    pub accuracy_excl_failures: Option<f64>,
    pub token_mean: f64,
    pub token_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSummary {
    pub pipeline: Pipeline,
    pub n: usize,
    pub token_mean: f64,
    pub token_sd: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Ordered by (pipeline, perspective).
    pub groups: Vec<GroupMetrics>,
    /// Token usage per pipeline across perspectives.
    pub tokens: Vec<TokenSummary>,
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn compute_metrics(records: &[EvalRecord], samples: &[BenchmarkSample]) -> Result<Report, HarnessError> {
    let perspective_of: BTreeMap<&str, Perspective> =
        samples.iter().map(|s| (s.sample_id.as_str(), s.perspective)).collect();
    let mut grouped: BTreeMap<(Pipeline, Perspective), Vec<&EvalRecord>> = BTreeMap::new();
    let mut per_pipeline: BTreeMap<Pipeline, Vec<f64>> = BTreeMap::new();
    for r in records {
        let perspective = *perspective_of
            .get(r.sample_id.as_str())
            .ok_or_else(|| HarnessError::UnknownSample(r.sample_id.clone()))?;
        grouped.entry((r.pipeline, perspective)).or_default().push(r);
        per_pipeline.entry(r.pipeline).or_default().push(r.total_tokens() as f64);
    }
    let groups = grouped
        .into_iter()
        .map(|((pipeline, perspective), rs)| {
            let n = rs.len();
            let correct = rs.iter().filter(|r| r.outcome == Outcome::Correct).count();
            let failures = rs.iter().filter(|r| r.outcome.is_failure()).count();
            let tokens: Vec<f64> = rs.iter().map(|r| r.total_tokens() as f64).collect();
            let (token_mean, token_sd) = mean_sd(&tokens);
            GroupMetrics {
                pipeline,
                perspective,
                n,
                correct,
                incorrect: n - correct - failures,
                failures,
                accuracy: correct as f64 / n as f64,
                failure_rate: failures as f64 / n as f64,
                accuracy_excl_failures: (n > failures).then(|| correct as f64 / (n - failures) as f64),
                token_mean,
                token_sd,
            }
        })
        .collect();
    let tokens = per_pipeline
        .into_iter()
        .map(|(pipeline, t)| {
            let (token_mean, token_sd) = mean_sd(&t);
            TokenSummary {
                pipeline,
                n: t.len(),
                token_mean,
                token_sd,
            }
        })
        .collect();
    Ok(Report { groups, tokens })
}

impl Report {
    pub fn group(&self, pipeline: Pipeline, perspective: Perspective) -> Result<&GroupMetrics, HarnessError> {
        self.groups
            .iter()
            .find(|g| g.pipeline == pipeline && g.perspective == perspective)
            .ok_or(HarnessError::EmptyGroup { pipeline, perspective })
    }

    pub fn to_markdown(&self) -> String {
        let pipelines: Vec<Pipeline> = {
            let mut p: Vec<Pipeline> = self.groups.iter().map(|g| g.pipeline).collect();
            p.dedup();
            p
        };
        let cell = |p: Pipeline, q: Perspective, f: &dyn Fn(&GroupMetrics) -> Option<f64>| {
            self.group(p, q)
                .ok()
                .and_then(f)
                .map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
        };
        let mut out = String::from("## Accuracy\n\n");
        out.push_str(
            "| Pipeline | Accuracy (Clinical) | Accuracy (Patient) | Failure Rate (Clinical) | Failure Rate (Patient) \
             | Acc. Excl. Failures (Clinical) | Acc. Excl. Failures (Patient) |\n",
        );
        out.push_str("|---|---|---|---|---|---|---|\n");
        for &p in &pipelines {
            let acc = |g: &GroupMetrics| Some(g.accuracy);
            let fail = |g: &GroupMetrics| Some(g.failure_rate);
            let excl = |g: &GroupMetrics| g.accuracy_excl_failures;
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                p.label(),
                cell(p, Perspective::Clinician, &acc),
                cell(p, Perspective::Patient, &acc),
                cell(p, Perspective::Clinician, &fail),
                cell(p, Perspective::Patient, &fail),
                cell(p, Perspective::Clinician, &excl),
                cell(p, Perspective::Patient, &excl),
            );
        }
        out.push_str("\n## Tokens per question\n\n| Strategy | Tokens | SD |\n|---|---|---|\n");
        for t in &self.tokens {
            let _ = writeln!(out, "| {} | {:.1} | {:.1} |", t.pipeline.label(), t.token_mean, t.token_sd);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for g in &self.groups {
            let excl = g.accuracy_excl_failures.map_or_else(String::new, |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{},{:.6},{:.6}",
                g.pipeline.as_str(),
                g.perspective,
                g.n,
                g.accuracy,
                g.failure_rate,
                excl,
                g.token_mean,
                g.token_sd
            );
        }
        out
    }
}

pub const CSV_HEADER: &str = "pipeline,perspective,n,accuracy,failure_rate,accuracy_excl_failures,token_mean,token_sd";
