//! `$everything` ingestion from a FHIR server.

use std::collections::HashSet;

use super::{bundle_entries, PatientBundle, StoreError};

/// GETs `{base}/Patient/{id}/$everything` and follows `next` links until the
/// last page, then builds the bundle from the concatenated entries.
pub fn fetch_everything(base_url: &str, patient_id: &str) -> Result<PatientBundle, StoreError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let mut next = Some(format!(
        "{}/Patient/{}/$everything",
        base_url.trim_end_matches('/'),
        patient_id
    ));
    let mut seen = HashSet::new();
    let mut resources = Vec::new();

    while let Some(url) = next.take() {
        if !seen.insert(url.clone()) {
            return Err(StoreError::NonFhirResponse(format!("page link cycle at {url}")));
        }
        let mut response = agent
            .get(&url)
            .header("Accept", "application/fhir+json")
            .call()
            .map_err(|e| StoreError::Transport(format!("GET {url}: {e}")))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(StoreError::Transport(format!("GET {url}: HTTP {status}")));
        }
        let body = response
            .body_mut()
            .with_config()
            .limit(u64::MAX)
            .read_to_string()
            .map_err(|e| StoreError::Transport(format!("GET {url}: {e}")))?;
        let page: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| StoreError::NonFhirResponse(format!("{url}: {e}")))?;
        if page.get("resourceType").and_then(|t| t.as_str()) != Some("Bundle") {
            return Err(StoreError::NonFhirResponse(format!("{url}: resourceType is not Bundle")));
        }
        next = page
            .get("link")
            .and_then(|l| l.as_array())
            .into_iter()
            .flatten()
            .find(|l| l.get("relation").and_then(|r| r.as_str()) == Some("next"))
            .and_then(|l| l.get("url"))
            .and_then(|u| u.as_str())
            .map(str::to_string);
        resources.extend(bundle_entries(page).map_err(|e| StoreError::NonFhirResponse(e.to_string()))?);
    }

    let bundle = PatientBundle::from_resources(resources)?;
    if bundle.patient_id() != patient_id {
        return Err(StoreError::MissingPatient { found: 0 });
    }
    Ok(bundle)
}
