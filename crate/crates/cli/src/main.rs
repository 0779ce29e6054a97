mod commands;
mod config;
mod endpoints;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fpqa_core::harness::HarnessError;
use fpqa_core::paraphrase::ParaphraseError;
use fpqa_core::{EngineError, StoreError};

/// Bad invocation: unknown values, malformed endpoint specs.
#[derive(Debug)]
pub struct UsageError(pub String);

/// A check ran to completion and found problems.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
impl std::error::Error for CheckFailed {}

#[derive(Parser, Debug)]
#[command(name = "fpqa", version, about = "FHIRPath question-answering benchmark toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory of patient bundles.
    #[arg(long, global = true)]
    bundles: Option<PathBuf>,
    /// Question template registry.
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
    /// Directory of prompt templates.
    #[arg(long, global = true)]
    prompts: Option<PathBuf>,
    /// Completion endpoint: mock:gold, mock:invalid, scripted:<file> or a URL.
    #[arg(long, global = true)]
    completion: Option<String>,
    /// Paraphrase generation endpoint: mock:rephrase, scripted:<file> or a URL.
    #[arg(long, global = true)]
    generation: Option<String>,
    /// Embedding endpoint: mock:hashing or a URL.
    #[arg(long, global = true)]
    embedding: Option<String>,
    /// FHIR server base URL; bundles are then fetched with `$everything`.
    #[arg(long, global = true)]
    fhir_base_url: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one FHIRPath expression against a bundle.
    Eval {
        /// Expression text, or @file to read it from an existing file.
        expr: String,
        /// Bundle path or fixture id.
        #[arg(long)]
        bundle: String,
    },
    /// Assemble benchmark and large-tier datasets.
    Forge {
        /// Kept paraphrases (JSONL); generated with the configured endpoints when omitted.
        #[arg(long)]
        paraphrases: Option<PathBuf>,
    },
    /// Re-execute every benchmark sample and compare with its stored answer.
    Validate { dataset: PathBuf },
    /// Generate and filter paraphrases for every template.
    Paraphrase,
    /// Run a QA pipeline over a benchmark dataset.
    EvalRun {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = PipelineArg::Both)]
        pipeline: PipelineArg,
    },
    /// Recompute the metrics report from stored records.
    Report {
        records: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    QueryFirst,
    RetrievalFirst,
    Both,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 64;
        }
        if cause.is::<CheckFailed>() {
            return 1;
        }
        if cause.is::<EngineError>() {
            return 2;
        }
        let unavailable = matches!(
            cause.downcast_ref::<ParaphraseError>(),
            Some(ParaphraseError::GeneratorUnavailable(_) | ParaphraseError::EmbedderUnavailable(_))
        ) || matches!(cause.downcast_ref::<HarnessError>(), Some(HarnessError::EndpointUnavailable(_)))
            || matches!(cause.downcast_ref::<StoreError>(), Some(StoreError::Transport(_)));
        if unavailable {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
