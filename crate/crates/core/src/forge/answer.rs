//! Projection of query results onto the four response types.

use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

use super::template::ResponseType;
use super::ForgeError;
use crate::fhirpath::{evaluate, parse, Collection, EvalContext};
use crate::store::PatientBundle;
use crate::value::FhirValue;

/// Canonical JSON for one value: object keys sorted, strings NFC.
pub fn canonical_value(v: &FhirValue) -> Value {
    match v {
        FhirValue::String(s) => Value::String(s.nfc().collect()),
        FhirValue::Array(items) => Value::Array(items.iter().map(canonical_value).collect()),
        FhirValue::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), canonical_value(v))).collect()),
        other => other.to_json(),
    }
}

pub fn project(collection: &Collection<'_>, response_type: ResponseType) -> Result<Value, ForgeError> {
    let mismatch = |found: String| ForgeError::ProjectionMismatch {
        expected: response_type,
        found,
    };
    let values: Vec<&FhirValue> = collection.values().collect();
    match response_type {
        ResponseType::List => Ok(Value::Array(values.into_iter().map(canonical_value).collect())),
        _ => {
            let [one] = values.as_slice() else {
                return Err(mismatch(format!("{} items", values.len())));
            };
            match (response_type, one) {
                (ResponseType::Count, FhirValue::Integer(_))
                | (ResponseType::Existence, FhirValue::Boolean(_))
                | (
                    ResponseType::Exact,
                    FhirValue::String(_) | FhirValue::Integer(_) | FhirValue::Decimal(_) | FhirValue::Boolean(_),
                ) => Ok(canonical_value(one)),
                (_, other) => Err(mismatch(format!("a single {}", other.kind()))),
            }
        }
    }
}

/// Executes with the default context and projects the result.
pub fn execute_answer(fhirpath: &str, bundle: &PatientBundle, response_type: ResponseType) -> Result<Value, ForgeError> {
    execute_answer_in(fhirpath, &EvalContext::new(bundle), response_type)
}

pub fn execute_answer_in(fhirpath: &str, ctx: &EvalContext<'_>, response_type: ResponseType) -> Result<Value, ForgeError> {
    let ast = parse(fhirpath)?;
    project(&evaluate(&ast, ctx)?, response_type)
}
