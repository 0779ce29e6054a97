//! The record clock: the latest event timestamp in a patient's record.
//!
//! De-identified records are date-shifted, so "now" for relative questions
//! ("this year", "last month") is the last dated event rather than the wall
//! clock.

use chrono::{DateTime, Utc};

use super::{PatientBundle, Resource, StoreError};
use crate::temporal::parse_instant;

/// Event timestamp fields that advance the clock, per resource type.
/// Partial dates count from their first instant; date-only values are
/// midnight UTC.
pub const CLOCK_FIELDS: &[(&str, &[&str])] = &[
    ("Encounter", &["period.start", "period.end"]),
    (
        "Observation",
        &["effectiveDateTime", "effectivePeriod.start", "effectivePeriod.end"],
    ),
    ("Condition", &["recordedDate", "onsetDateTime"]),
    ("MedicationRequest", &["authoredOn"]),
    (
        "MedicationAdministration",
        &["effectiveDateTime", "effectivePeriod.start", "effectivePeriod.end"],
    ),
    (
        "Procedure",
        &["performedDateTime", "performedPeriod.start", "performedPeriod.end"],
    ),
    ("Specimen", &["collection.collectedDateTime"]),
];

pub(super) fn resource_timestamps(resource: &Resource) -> impl Iterator<Item = DateTime<Utc>> + '_ {
    CLOCK_FIELDS
        .iter()
        .filter(move |(ty, _)| *ty == resource.resource_type())
        .flat_map(|(_, fields)| fields.iter())
        .filter_map(move |field| resource.root().get_path(field)?.as_str().and_then(parse_instant))
}

pub(super) fn max_timestamp(resources: &[Resource]) -> Option<DateTime<Utc>> {
    resources.iter().flat_map(resource_timestamps).max()
}

pub fn compute_clock(bundle: &PatientBundle) -> Result<DateTime<Utc>, StoreError> {
    max_timestamp(bundle.resources()).ok_or(StoreError::NoTimestamps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{load_bundle, BundleFormat};
    use crate::temporal::format_instant;
    use proptest::prelude::*;

    fn bundle(lines: &[String]) -> PatientBundle {
        let mut text = String::from("{\"resourceType\":\"Patient\",\"id\":\"p\"}\n");
        for l in lines {
            text.push_str(l);
            text.push('\n');
        }
        load_bundle(text.as_bytes(), BundleFormat::Ndjson).unwrap()
    }

    fn obs(id: usize, at: &str) -> String {
        format!("{{\"resourceType\":\"Observation\",\"id\":\"o{id}\",\"effectiveDateTime\":\"{at}\"}}")
    }

    #[test]
    fn single_timestamp() {
        let b = bundle(&[obs(1, "2185-03-01T10:00:00Z")]);
        assert_eq!(format_instant(&compute_clock(&b).unwrap()), "2185-03-01T10:00:00Z");
    }

    #[test]
    fn date_only_end_is_midnight() {
        let enc = r#"{"resourceType":"Encounter","id":"e1","period":{"start":"2185-05-20","end":"2185-06-01"}}"#;
        let b = bundle(&[enc.to_string(), obs(1, "2185-03-01")]);
        assert_eq!(format_instant(&compute_clock(&b).unwrap()), "2185-06-01T00:00:00Z");
    }

    #[test]
    fn no_timestamps() {
        let b = bundle(&["{\"resourceType\":\"Location\",\"id\":\"l\"}".to_string()]);
        assert!(matches!(compute_clock(&b), Err(StoreError::NoTimestamps)));
        assert!(b.clock().is_none());
    }

    #[test]
    fn unlisted_fields_do_not_count() {
        let b = bundle(&[
            obs(1, "2185-03-01"),
            r#"{"resourceType":"Observation","id":"o2","issued":"2190-01-01T00:00:00Z"}"#.to_string(),
        ]);
        assert_eq!(format_instant(&compute_clock(&b).unwrap()), "2185-03-01T00:00:00Z");
    }

    proptest! {
        #[test]
        fn clock_is_monotone(days in prop::collection::vec(0u32..3000, 1..8), extra in 0u32..3000) {
            let base = chrono::NaiveDate::from_ymd_opt(2180, 1, 1).unwrap();
            let stamp = |d: u32| (base + chrono::Duration::days(d as i64)).format("%Y-%m-%d").to_string();
            let lines: Vec<String> = days.iter().enumerate().map(|(i, d)| obs(i, &stamp(*d))).collect();
            let before = compute_clock(&bundle(&lines)).unwrap();
            let mut more = lines.clone();
            more.push(obs(999, &stamp(extra)));
            let after = compute_clock(&bundle(&more)).unwrap();
            prop_assert!(after >= before);
            if extra <= *days.iter().max().unwrap() {
                prop_assert_eq!(after, before);
            }
        }
    }
}
