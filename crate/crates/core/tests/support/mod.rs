#![allow(dead_code)]

pub mod oracle;
pub mod paraphrase_set;

use std::path::PathBuf;

use fpqa_core::store::load_bundle_file;
use fpqa_core::PatientBundle;

pub const MINI: [&str; 5] = ["mini-01", "mini-02", "mini-03", "mini-04", "mini-05"];

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture_path(id: &str) -> PathBuf {
    let dir = workspace_root().join("fixtures");
    let dir = if id.starts_with("fig2") { dir.join("fig2") } else { dir };
    dir.join(format!("{id}.ndjson"))
}

pub fn fixture(id: &str) -> PatientBundle {
    load_bundle_file(&fixture_path(id)).unwrap_or_else(|e| panic!("{id}: {e}"))
}

pub fn fixture_json(id: &str) -> Vec<serde_json::Value> {
    std::fs::read_to_string(fixture_path(id))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn minis() -> Vec<PatientBundle> {
    MINI.iter().map(|id| fixture(id)).collect()
}

pub fn starter_registry() -> fpqa_core::Registry {
    fpqa_core::forge::load_templates(&workspace_root().join("templates/starter.json")).unwrap()
}

const LEAD_INS: [&str; 8] = ["", "Quick question: ", "Please check: ", "I need to know: ", "From the chart, ", "Briefly, ", "One more: ", "Looking at the record, "];

/// `per_stratum` stand-in paraphrases for every template and perspective,
/// built from the perspective's reference question with varied lead-ins.
pub fn synthetic_paraphrases(
    registry: &fpqa_core::Registry,
    per_stratum: usize,
) -> std::collections::BTreeMap<(String, fpqa_core::Perspective), Vec<fpqa_core::ParaphraseCandidate>> {
    use fpqa_core::paraphrase::reference_question;
    use fpqa_core::{ParaphraseCandidate, Perspective};
    let mut out = std::collections::BTreeMap::new();
    for t in registry.iter() {
        for p in Perspective::ALL {
            let q = reference_question(t, p);
            let set = (0..per_stratum)
                .map(|i| ParaphraseCandidate {
                    candidate_id: i as u32,
                    template_id: t.template_id.clone(),
                    perspective: p,
                    text: format!("{}{q} (variant {i})", LEAD_INS[i % LEAD_INS.len()]),
                })
                .collect();
            out.insert((t.template_id.clone(), p), set);
        }
    }
    out
}

pub fn bundle_map(bundles: Vec<PatientBundle>) -> std::collections::BTreeMap<String, PatientBundle> {
    bundles.into_iter().map(|b| (b.patient_id().to_string(), b)).collect()
}
