//! Loading and indexing of FHIR R4 patient bundles.

mod clock;
mod fetch;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, Utc};

use crate::value::FhirValue;

pub use clock::{compute_clock, CLOCK_FIELDS};
pub use fetch::fetch_everything;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("malformed input{}: {reason}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    MalformedInput { line: Option<usize>, reason: String },
    #[error("expected exactly one Patient resource, found {found}")]
    MissingPatient { found: usize },
    #[error("duplicate resource {0}")]
    DuplicateId(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("response is not a FHIR Bundle: {0}")]
    NonFhirResponse(String),
    #[error("no parseable event timestamps in bundle")]
    NoTimestamps,
    #[error("unsupported reference `{0}`: only relative Type/id references resolve")]
    UnsupportedReference(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl StoreError {
    fn malformed(line: Option<usize>, reason: impl Into<String>) -> Self {
        StoreError::MalformedInput {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleFormat {
    BundleJson,
    Ndjson,
}

impl BundleFormat {
    /// `.ndjson` files are NDJSON, everything else a Bundle document.
    pub fn from_path(path: &std::path::Path) -> BundleFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ndjson") | Some("jsonl") => BundleFormat::Ndjson,
            _ => BundleFormat::BundleJson,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    resource_type: String,
    id: String,
    root: FhirValue,
}

impl Resource {
    pub fn from_value(root: FhirValue) -> Result<Resource, StoreError> {
        Self::from_value_at(root, None)
    }

    fn from_value_at(root: FhirValue, line: Option<usize>) -> Result<Resource, StoreError> {
        let resource_type = match root.get("resourceType") {
            Some(FhirValue::String(t)) if !t.is_empty() => t.clone(),
            _ => return Err(StoreError::malformed(line, "resource without a resourceType")),
        };
        let id = match root.get("id") {
            Some(FhirValue::String(id)) if !id.is_empty() => id.clone(),
            _ => {
                return Err(StoreError::malformed(
                    line,
                    format!("{resource_type} resource without an id"),
                ))
            }
        };
        Ok(Resource {
            resource_type,
            id,
            root,
        })
    }

    pub fn resource_type(&self) -> &str {
        &self.resource_type
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn root(&self) -> &FhirValue {
        &self.root
    }

    /// `Type/id`
    pub fn key(&self) -> String {
        format!("{}/{}", self.resource_type, self.id)
    }
}

/// One patient's full record. Immutable once built.
#[derive(Debug, Clone)]
pub struct PatientBundle {
    patient_id: String,
    resources: Vec<Resource>,
    reference_index: HashMap<String, usize>,
    clock: Option<DateTime<Utc>>,
}

impl PartialEq for PatientBundle {
    fn eq(&self, other: &Self) -> bool {
        self.patient_id == other.patient_id && self.resources == other.resources && self.clock == other.clock
    }
}

impl PatientBundle {
    pub fn from_resources(resources: Vec<Resource>) -> Result<PatientBundle, StoreError> {
        let mut reference_index = HashMap::with_capacity(resources.len());
        for (pos, r) in resources.iter().enumerate() {
            if reference_index.insert(r.key(), pos).is_some() {
                return Err(StoreError::DuplicateId(r.key()));
            }
        }
        let patients: Vec<&Resource> = resources.iter().filter(|r| r.resource_type == "Patient").collect();
        if patients.len() != 1 {
            return Err(StoreError::MissingPatient { found: patients.len() });
        }
        let patient_id = patients[0].id.clone();
        let clock = clock::max_timestamp(&resources);
        Ok(PatientBundle {
            patient_id,
            resources,
            reference_index,
            clock,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }

    /// Latest event timestamp, or `None` when the record has no dated events.
    pub fn clock(&self) -> Option<DateTime<Utc>> {
        self.clock
    }

    pub fn patient(&self) -> &Resource {
        self.resources
            .iter()
            .find(|r| r.resource_type == "Patient")
            .expect("bundle invariant: exactly one Patient")
    }

    pub fn resources_of_type<'a>(&'a self, resource_type: &'a str) -> impl Iterator<Item = &'a Resource> + 'a {
        self.resources.iter().filter(move |r| r.resource_type == resource_type)
    }

    /// Resolves a relative `Type/id` reference. Absolute URLs and contained
    /// (`#id`) references are rejected.
    pub fn resolve_reference(&self, reference: &str) -> Result<Option<&Resource>, StoreError> {
        let unsupported = reference.starts_with('#')
            || reference.contains("://")
            || reference.starts_with("urn:")
            || reference.split('/').count() != 2;
        if unsupported {
            return Err(StoreError::UnsupportedReference(reference.to_string()));
        }
        Ok(self.reference_index.get(reference).map(|&pos| &self.resources[pos]))
    }

    pub fn to_bundle_json(&self) -> String {
        let entries: Vec<serde_json::Value> = self
            .resources
            .iter()
            .map(|r| serde_json::json!({ "resource": r.root.to_json() }))
            .collect();
        let bundle = serde_json::json!({
            "resourceType": "Bundle",
            "type": "searchset",
            "entry": entries,
        });
        serde_json::to_string_pretty(&bundle).expect("json values always serialize")
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.resources {
            out.push_str(&r.root.to_canonical_string());
            out.push('\n');
        }
        out
    }
}

pub fn load_bundle<R: Read>(source: R, format: BundleFormat) -> Result<PatientBundle, StoreError> {
    let resources = match format {
        BundleFormat::BundleJson => {
            let value: serde_json::Value =
                serde_json::from_reader(source).map_err(|e| StoreError::malformed(None, e.to_string()))?;
            bundle_entries(value)?
        }
        BundleFormat::Ndjson => {
            let mut out = Vec::new();
            for (n, line) in BufReader::new(source).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value =
                    serde_json::from_str(&line).map_err(|e| StoreError::malformed(Some(n + 1), e.to_string()))?;
                let value = FhirValue::from_json(value).map_err(|e| StoreError::malformed(Some(n + 1), e.to_string()))?;
                out.push(Resource::from_value_at(value, Some(n + 1))?);
            }
            out
        }
    };
    PatientBundle::from_resources(resources)
}

pub fn load_bundle_file(path: &std::path::Path) -> Result<PatientBundle, StoreError> {
    let file = std::fs::File::open(path)?;
    load_bundle(file, BundleFormat::from_path(path))
}

/// Pulls `entry[].resource` out of a Bundle document.
pub(crate) fn bundle_entries(value: serde_json::Value) -> Result<Vec<Resource>, StoreError> {
    if value.get("resourceType").and_then(|t| t.as_str()) != Some("Bundle") {
        return Err(StoreError::malformed(None, "document is not a FHIR Bundle"));
    }
    let entries = match value.get("entry") {
        None => return Ok(Vec::new()),
        Some(serde_json::Value::Array(entries)) => entries.clone(),
        Some(_) => return Err(StoreError::malformed(None, "Bundle.entry is not an array")),
    };
    entries
        .into_iter()
        .enumerate()
        .map(|(i, mut entry)| {
            let resource = entry
                .get_mut("resource")
                .map(serde_json::Value::take)
                .ok_or_else(|| StoreError::malformed(None, format!("entry {i} has no resource")))?;
            let value = FhirValue::from_json(resource).map_err(|e| StoreError::malformed(None, e.to_string()))?;
            Resource::from_value(value)
        })
        .collect()
}
