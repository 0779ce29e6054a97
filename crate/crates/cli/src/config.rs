//! Run configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use fpqa_core::forge::{ForgeConfig, DEFAULT_RATIOS};
use fpqa_core::harness::{HarnessConfig, Selector};
use fpqa_core::paraphrase::FilterConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory of patient bundles (`*.ndjson`, `*.bundle.json`).
    pub bundles_dir: PathBuf,
    pub templates: PathBuf,
    pub prompts: PathBuf,
    pub output: PathBuf,
    /// Kept paraphrases (JSONL) for `forge`; generated on the fly when unset.
    pub paraphrases: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            bundles_dir: "fixtures".into(),
            templates: "templates/starter.json".into(),
            prompts: "prompts".into(),
            output: "out".into(),
            paraphrases: None,
        }
    }
}

/// Endpoint specs: `mock:<name>`, `scripted:<file>` or an http(s) URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoints {
    pub completion: String,
    pub embedding: String,
    pub generation: String,
    pub fhir_base_url: Option<String>,
}

impl Default for Endpoints {
    fn default() -> Self {
        Endpoints {
            completion: "mock:gold".into(),
            embedding: "mock:hashing".into(),
            generation: "mock:rephrase".into(),
            fhir_base_url: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub paths: Paths,
    pub endpoints: Endpoints,
    pub filter: FilterConfig,
    pub split_ratios: [f64; 3],
    pub master_seed: u64,
    pub large_patients_per_paraphrase: usize,
    pub context_limit_tokens: u64,
    pub max_tokens: u32,
    pub in_flight: usize,
    pub selector: Selector,
    /// Patient ids to pull with `$everything` when `fhir_base_url` is set.
    pub patients: Vec<String>,
}

impl Default for CliConfig {
    fn default() -> Self {
        let harness = HarnessConfig::default();
        CliConfig {
            paths: Paths::default(),
            endpoints: Endpoints::default(),
            filter: FilterConfig::default(),
            split_ratios: DEFAULT_RATIOS,
            master_seed: 42,
            large_patients_per_paraphrase: ForgeConfig::default().assemble.large_patients_per_paraphrase,
            context_limit_tokens: harness.context_limit_tokens,
            max_tokens: harness.max_tokens,
            in_flight: harness.in_flight,
            selector: harness.selector,
            patients: Vec::new(),
        }
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<CliConfig> {
        let Some(path) = path else {
            return Ok(CliConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn forge(&self) -> ForgeConfig {
        let mut config = ForgeConfig {
            split_ratios: self.split_ratios,
            ..ForgeConfig::default()
        };
        config.assemble.large_patients_per_paraphrase = self.large_patients_per_paraphrase;
        config
    }

    pub fn harness(&self) -> HarnessConfig {
        HarnessConfig {
            context_limit_tokens: self.context_limit_tokens,
            max_tokens: self.max_tokens,
            in_flight: self.in_flight,
            selector: self.selector,
        }
    }

    /// Writes the effective config as `run-config.json` into `dir`.
    pub fn echo_into(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(dir.join("run-config.json"), text)?;
        Ok(())
    }
}
