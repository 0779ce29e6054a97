//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fpqa_core::fhirpath::execute;
use fpqa_core::forge::{
    self, execute_answer, group_paraphrases, hygiene_violations, load_templates, read_jsonl, sft_examples, write_jsonl,
    BenchmarkSample, Tier,
};
use fpqa_core::harness::{
    compute_metrics, read_records, run_query_first, run_retrieval_first, write_records, HarnessError, HarnessPrompts,
    Outcome, Pipeline,
};
use fpqa_core::paraphrase::{refine_all, AttritionReport, Prompts};
use fpqa_core::store::{fetch_everything, load_bundle_file};
use fpqa_core::{ParaphraseCandidate, PatientBundle, Registry};

use crate::config::CliConfig;
use crate::{endpoints, CheckFailed, Command, Common, PipelineArg, UsageError};

fn effective_config(common: &Common) -> anyhow::Result<CliConfig> {
    let mut c = CliConfig::load(common.config.as_deref())?;
    let set = |slot: &mut PathBuf, v: &Option<PathBuf>| {
        if let Some(v) = v {
            *slot = v.clone();
        }
    };
    set(&mut c.paths.output, &common.out);
    set(&mut c.paths.bundles_dir, &common.bundles);
    set(&mut c.paths.templates, &common.templates);
    set(&mut c.paths.prompts, &common.prompts);
    for (slot, v) in [
        (&mut c.endpoints.completion, &common.completion),
        (&mut c.endpoints.generation, &common.generation),
        (&mut c.endpoints.embedding, &common.embedding),
    ] {
        if let Some(v) = v {
            *slot = v.clone();
        }
    }
    if common.fhir_base_url.is_some() {
        c.endpoints.fhir_base_url = common.fhir_base_url.clone();
    }
    if let Some(seed) = common.seed {
        c.master_seed = seed;
    }
    Ok(c)
}

pub fn run(command: Command, common: &Common) -> anyhow::Result<()> {
    let mut config = effective_config(common)?;
    match command {
        Command::Eval { expr, bundle } => eval(&config, &expr, &bundle),
        Command::Forge { paraphrases } => {
            if paraphrases.is_some() {
                config.paths.paraphrases = paraphrases;
            }
            forge(&config)
        }
        Command::Validate { dataset } => validate(&config, &dataset),
        Command::Paraphrase => paraphrase(&config),
        Command::EvalRun { dataset, pipeline } => eval_run(&config, &dataset, pipeline),
        Command::Report { records, dataset } => report(&config, &records, &dataset),
    }
}

fn is_bundle_file(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".ndjson") || name.ends_with(".bundle.json")
}

fn sorted_entries(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort();
    Ok(entries)
}

/// Every bundle file directly inside `dir`.
fn load_dir(dir: &Path) -> anyhow::Result<Vec<PatientBundle>> {
    sorted_entries(dir)?
        .into_iter()
        .filter(|p| p.is_file() && is_bundle_file(p))
        .map(|p| load_bundle_file(&p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

/// Patients from the FHIR server when one is configured, else the bundle
/// directory.
fn patients(config: &CliConfig) -> anyhow::Result<Vec<PatientBundle>> {
    let bundles = match &config.endpoints.fhir_base_url {
        Some(url) => {
            if config.patients.is_empty() {
                return Err(UsageError("fhir_base_url is set but `patients` lists no ids".into()).into());
            }
            config
                .patients
                .iter()
                .map(|id| fetch_everything(url, id).with_context(|| format!("fetching patient {id}")))
                .collect::<anyhow::Result<Vec<_>>>()?
        }
        None => load_dir(&config.paths.bundles_dir)?,
    };
    let mut seen = std::collections::BTreeSet::new();
    for b in &bundles {
        if !seen.insert(b.patient_id()) {
            bail!("patient {} appears in more than one bundle", b.patient_id());
        }
    }
    Ok(bundles)
}

fn bundle_map(bundles: Vec<PatientBundle>) -> BTreeMap<String, PatientBundle> {
    bundles.into_iter().map(|b| (b.patient_id().to_string(), b)).collect()
}

fn find_fixture(dir: &Path, id: &str) -> Option<PathBuf> {
    let entries = sorted_entries(dir).ok()?;
    let names = [format!("{id}.ndjson"), format!("{id}.bundle.json")];
    entries
        .iter()
        .find(|p| p.is_file() && names.iter().any(|n| p.file_name().is_some_and(|f| f == n.as_str())))
        .cloned()
        .or_else(|| entries.iter().filter(|p| p.is_dir()).find_map(|d| find_fixture(d, id)))
}

/// A bundle path, or a fixture id looked up under the bundle directory.
fn resolve_bundle(config: &CliConfig, arg: &str) -> anyhow::Result<PatientBundle> {
    let direct = Path::new(arg);
    let path = if direct.is_file() {
        direct.to_path_buf()
    } else {
        find_fixture(&config.paths.bundles_dir, arg).ok_or_else(|| {
            UsageError(format!(
                "no bundle file `{arg}` and no fixture with that id under {}",
                config.paths.bundles_dir.display()
            ))
        })?
    };
    load_bundle_file(&path).with_context(|| format!("loading {}", path.display()))
}

fn eval(config: &CliConfig, expr: &str, bundle: &str) -> anyhow::Result<()> {
    // `@2185-01-01 < ...` is an expression, `@queries/x.fhirpath` a file
    let text = match expr.strip_prefix('@').filter(|p| Path::new(p).is_file()) {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => expr.to_string(),
    };
    let bundle = resolve_bundle(config, bundle)?;
    let result = execute(text.trim(), &bundle)?;
    println!("{}", result.to_canonical_string());
    Ok(())
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?);
    }
    Ok(items)
}

fn read_dataset(path: &Path) -> anyhow::Result<Vec<BenchmarkSample>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?)
}

fn registry(config: &CliConfig) -> anyhow::Result<Registry> {
    let path = &config.paths.templates;
    Ok(load_templates(path).with_context(|| format!("loading templates {}", path.display()))?)
}

fn generate(config: &CliConfig, registry: &Registry) -> anyhow::Result<(Vec<ParaphraseCandidate>, AttritionReport)> {
    let prompts = Prompts::load(&config.paths.prompts)?;
    let generator = endpoints::generator(&config.endpoints.generation)?;
    let embedder = endpoints::embedder(&config.endpoints.embedding)?;
    Ok(refine_all(
        registry,
        generator.as_ref(),
        embedder.as_ref(),
        &prompts,
        &config.filter,
        config.in_flight,
    )?)
}

fn paraphrase(config: &CliConfig) -> anyhow::Result<()> {
    let registry = registry(config)?;
    let (kept, report) = generate(config, &registry)?;
    let out = &config.paths.output;
    config.echo_into(out)?;
    let mut w = create(out, "paraphrases.jsonl")?;
    for c in &kept {
        serde_json::to_writer(&mut w, c)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    write_json(out, "attrition-report.json", &report)?;
    for (p, c) in &report.per_perspective {
        eprintln!(
            "{p}: generated {}, slot integrity {}, lexical {}, semantic {}",
            c.generated, c.slot_integrity, c.lexical, c.semantic
        );
    }
    Ok(())
}

fn forge(config: &CliConfig) -> anyhow::Result<()> {
    let registry = registry(config)?;
    let patients = patients(config)?;
    let candidates = match &config.paths.paraphrases {
        Some(path) => read_lines(path)?,
        None => generate(config, &registry)?.0,
    };
    let assembly = forge::forge(
        &patients,
        &registry,
        &group_paraphrases(candidates),
        &config.forge(),
        config.master_seed,
    )?;

    let out = &config.paths.output;
    config.echo_into(out)?;
    write_jsonl(&assembly.benchmark, create(out, "benchmark.jsonl")?)?;
    write_jsonl(&assembly.large, create(out, "large.jsonl")?)?;
    let mut sft = create(out, "sft-train.jsonl")?;
    for ex in sft_examples(&assembly.large) {
        serde_json::to_writer(&mut sft, &ex)?;
        sft.write_all(b"\n")?;
    }
    sft.flush()?;
    write_json(out, "skip-report.json", &assembly.skip_report)?;
    eprintln!(
        "{} benchmark samples, {} large-tier samples, {} templates skipped",
        assembly.benchmark.len(),
        assembly.large.len(),
        assembly.skip_report.skipped.len()
    );

    let all: Vec<BenchmarkSample> = assembly.benchmark.iter().chain(&assembly.large).cloned().collect();
    let leaks = hygiene_violations(&all, &registry);
    if !leaks.is_empty() {
        return Err(CheckFailed(format!(
            "{} train-split queries name a held-out resource type: {}",
            leaks.len(),
            leaks.join(", ")
        ))
        .into());
    }
    Ok(())
}

fn validate(config: &CliConfig, dataset: &Path) -> anyhow::Result<()> {
    let samples = read_dataset(dataset)?;
    let bundles = bundle_map(patients(config)?);
    let mut checked = 0;
    let mut problems = Vec::new();
    for s in samples.iter().filter(|s| s.tier == Tier::Benchmark) {
        checked += 1;
        let Some(bundle) = bundles.get(&s.patient_id) else {
            problems.push(format!("{}\tMissingBundle: no bundle for patient {}", s.sample_id, s.patient_id));
            continue;
        };
        let stored = s.answer.as_ref().map(|a| a.to_string()).unwrap_or_default();
        match execute_answer(&s.fhirpath, bundle, s.answer_type) {
            Ok(fresh) if fresh.to_string() == stored => {}
            Ok(fresh) => problems.push(format!("{}\tstored {stored}\tfresh {fresh}", s.sample_id)),
            Err(e) => problems.push(format!("{}\tstored {stored}\terror {e}", s.sample_id)),
        }
    }
    for p in &problems {
        println!("{p}");
    }
    eprintln!("checked {checked} benchmark samples: {} failed", problems.len());
    if !problems.is_empty() {
        return Err(CheckFailed(format!("{} of {checked} samples failed the round trip", problems.len())).into());
    }
    Ok(())
}

fn write_report(config: &CliConfig, report: &fpqa_core::Report) -> anyhow::Result<()> {
    let out = &config.paths.output;
    std::fs::write(out.join("report.md"), report.to_markdown())?;
    std::fs::write(out.join("report.csv"), report.to_csv())?;
    print!("{}", report.to_markdown());
    Ok(())
}

fn eval_run(config: &CliConfig, dataset: &Path, pipeline: PipelineArg) -> anyhow::Result<()> {
    let samples = read_dataset(dataset)?;
    let registry = registry(config)?;
    let bundles = bundle_map(patients(config)?);
    let prompts = HarnessPrompts::load(&config.paths.prompts)?;
    let harness = config.harness();
    let pipelines: &[Pipeline] = match pipeline {
        PipelineArg::QueryFirst => &[Pipeline::QueryFirst],
        PipelineArg::RetrievalFirst => &[Pipeline::RetrievalFirst],
        PipelineArg::Both => &[Pipeline::QueryFirst, Pipeline::RetrievalFirst],
    };
    let mut records = Vec::new();
    for &p in pipelines {
        let completion = endpoints::completion(&config.endpoints.completion, p, &samples)?;
        records.extend(match p {
            Pipeline::QueryFirst => run_query_first(&samples, completion.as_ref(), &bundles, &prompts, &harness)?,
            Pipeline::RetrievalFirst => {
                run_retrieval_first(&samples, completion.as_ref(), &bundles, &registry, &prompts, &harness)?
            }
        });
    }
    if records.is_empty() {
        return Err(CheckFailed(format!("{} has no benchmark-tier samples", dataset.display())).into());
    }

    let out = &config.paths.output;
    config.echo_into(out)?;
    write_records(&records, create(out, "records.jsonl")?)?;
    let report = compute_metrics(&records, &samples)?;
    write_report(config, &report)?;
    if records.iter().all(|r| r.outcome == Outcome::FailureTransport) {
        return Err(HarnessError::EndpointUnavailable(format!(
            "every call to `{}` failed",
            config.endpoints.completion
        ))
        .into());
    }
    Ok(())
}

fn report(config: &CliConfig, records: &Path, dataset: &Path) -> anyhow::Result<()> {
    let file = File::open(records).with_context(|| format!("opening {}", records.display()))?;
    let records = read_records(BufReader::new(file))?;
    let samples = read_dataset(dataset)?;
    let report = compute_metrics(&records, &samples)?;
    config.echo_into(&config.paths.output)?;
    write_report(config, &report)
}
