//! Inputs shared by the criterion benches.

use std::path::PathBuf;

use fpqa_core::store::{load_bundle, load_bundle_file, BundleFormat};
use fpqa_core::PatientBundle;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(relative: &str) -> PatientBundle {
    load_bundle_file(&workspace_root().join("fixtures").join(relative)).expect("fixture loads")
}

pub fn fig2_query() -> String {
    std::fs::read_to_string(workspace_root().join("queries/fig2.fhirpath"))
        .expect("fig2 query")
        .trim()
        .to_string()
}

/// One patient plus `size - 1` creatinine observations.
pub fn synthetic_bundle(size: usize) -> PatientBundle {
    let mut ndjson = String::from(r#"{"resourceType":"Patient","id":"p-bench"}"#);
    ndjson.push('\n');
    for i in 1..size {
        ndjson.push_str(&format!(
            concat!(
                r#"{{"resourceType":"Observation","id":"obs-{}","status":"final","#,
                r#""code":{{"coding":[{{"display":"Creatinine"}}]}},"subject":{{"reference":"Patient/p-bench"}},"#,
                r#""effectiveDateTime":"2185-{:02}-{:02}T08:00:00Z","valueQuantity":{{"value":{}.{}}}}}"#,
                "\n"
            ),
            i,
            1 + i % 12,
            1 + i % 28,
            1 + i % 3,
            i % 10
        ));
    }
    load_bundle(ndjson.as_bytes(), BundleFormat::Ndjson).expect("synthetic bundle loads")
}
