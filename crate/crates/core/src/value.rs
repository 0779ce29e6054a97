//! Generic JSON tree for FHIR resource content.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Number, Value};

/// A FHIR JSON node.
///
/// Objects keep their fields in a `BTreeMap`, so field names are unique and
/// serialization order is stable. Decimals are held as [`Decimal`] parsed from
/// the source text, which keeps their scale (`1.50` stays `1.50`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FhirValue {
    Object(BTreeMap<String, FhirValue>),
    Array(Vec<FhirValue>),
    String(String),
    Decimal(Decimal),
    Integer(i64),
    Boolean(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrepresentable number literal `{0}`")]
pub struct NumberError(pub String);

impl FhirValue {
    pub fn kind(&self) -> &'static str {
        match self {
            FhirValue::Object(_) => "object",
            FhirValue::Array(_) => "array",
            FhirValue::String(_) => "string",
            FhirValue::Decimal(_) => "decimal",
            FhirValue::Integer(_) => "integer",
            FhirValue::Boolean(_) => "boolean",
            FhirValue::Null => "null",
        }
    }

    pub fn as_object(&self) -> Option<&BTreeMap<String, FhirValue>> {
        match self {
            FhirValue::Object(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            FhirValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn get(&self, field: &str) -> Option<&FhirValue> {
        self.as_object().and_then(|m| m.get(field))
    }

    /// Follows a dotted field path, stopping at the first array or missing field.
    pub fn get_path(&self, path: &str) -> Option<&FhirValue> {
        path.split('.').try_fold(self, |v, f| v.get(f))
    }

    pub fn is_primitive(&self) -> bool {
        matches!(
            self,
            FhirValue::String(_) | FhirValue::Decimal(_) | FhirValue::Integer(_) | FhirValue::Boolean(_)
        )
    }

    /// Parses a JSON number from its source text.
    pub fn number_from_text(text: &str) -> Result<FhirValue, NumberError> {
        let is_integral = !text.contains(['.', 'e', 'E']);
        if is_integral {
            if let Ok(i) = text.parse::<i64>() {
                return Ok(FhirValue::Integer(i));
            }
        }
        Decimal::from_str(text)
            .or_else(|_| Decimal::from_scientific(text))
            .map(FhirValue::Decimal)
            .map_err(|_| NumberError(text.to_string()))
    }

    pub fn from_json(value: Value) -> Result<FhirValue, NumberError> {
        Ok(match value {
            Value::Null => FhirValue::Null,
            Value::Bool(b) => FhirValue::Boolean(b),
            Value::Number(n) => FhirValue::number_from_text(&n.to_string())?,
            Value::String(s) => FhirValue::String(s),
            Value::Array(items) => FhirValue::Array(
                items
                    .into_iter()
                    .map(FhirValue::from_json)
                    .collect::<Result<_, _>>()?,
            ),
            Value::Object(map) => FhirValue::Object(
                map.into_iter()
                    .map(|(k, v)| Ok((k, FhirValue::from_json(v)?)))
                    .collect::<Result<_, NumberError>>()?,
            ),
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            FhirValue::Null => Value::Null,
            FhirValue::Boolean(b) => Value::Bool(*b),
            FhirValue::Integer(i) => Value::Number((*i).into()),
            FhirValue::Decimal(d) => decimal_to_json(d),
            FhirValue::String(s) => Value::String(s.clone()),
            FhirValue::Array(items) => Value::Array(items.iter().map(FhirValue::to_json).collect()),
            FhirValue::Object(map) => Value::Object(
                map.iter()
                    .map(|(k, v)| (k.clone(), v.to_json()))
                    .collect::<Map<_, _>>(),
            ),
        }
    }

    /// Canonical JSON text: sorted field names, decimals written with their scale.
    pub fn to_canonical_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("json values always serialize")
    }
}

pub(crate) fn decimal_to_json(d: &Decimal) -> Value {
    // Decimal's Display never produces exponents, so this always parses.
    Value::Number(Number::from_str(&d.to_string()).expect("decimal text is a valid JSON number"))
}

impl fmt::Display for FhirValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FhirValue::String(s) => f.write_str(s),
            FhirValue::Decimal(d) => write!(f, "{d}"),
            FhirValue::Integer(i) => write!(f, "{i}"),
            FhirValue::Boolean(b) => write!(f, "{b}"),
            other => f.write_str(&other.to_canonical_string()),
        }
    }
}

impl Serialize for FhirValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FhirValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        FhirValue::from_json(value).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decimals_keep_scale() {
        let v: FhirValue = serde_json::from_str(r#"{"value": 1.50, "n": 3, "big": 12345678901234567890}"#).unwrap();
        assert_eq!(v.to_canonical_string(), r#"{"big":12345678901234567890,"n":3,"value":1.50}"#);
        assert!(matches!(v.get("n"), Some(FhirValue::Integer(3))));
    }

    #[test]
    fn canonical_order_is_sorted() {
        let v: FhirValue = serde_json::from_str(r#"{"b": [true, null], "a": "x"}"#).unwrap();
        assert_eq!(v.to_canonical_string(), r#"{"a":"x","b":[true,null]}"#);
    }

    #[test]
    fn get_path_walks_objects() {
        let v: FhirValue = serde_json::from_str(r#"{"period": {"start": "2185-01-01"}}"#).unwrap();
        assert_eq!(v.get_path("period.start").and_then(FhirValue::as_str), Some("2185-01-01"));
        assert!(v.get_path("period.end").is_none());
    }

    fn arb_value() -> impl Strategy<Value = FhirValue> {
        let leaf = prop_oneof![
            Just(FhirValue::Null),
            any::<bool>().prop_map(FhirValue::Boolean),
            any::<i64>().prop_map(FhirValue::Integer),
            (any::<i32>(), 1u32..6).prop_map(|(m, s)| FhirValue::Decimal(Decimal::new(m as i64, s))),
            "[a-zA-Z0-9 éü'\"\\\\-]{0,12}".prop_map(FhirValue::String),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(FhirValue::Array),
                prop::collection::btree_map("[a-z]{1,6}", inner, 0..4).prop_map(FhirValue::Object),
            ]
        })
    }

    proptest! {
        #[test]
        fn canonical_json_round_trips(v in arb_value()) {
            let text = v.to_canonical_string();
            let back: FhirValue = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&back, &v);
            prop_assert_eq!(back.to_canonical_string(), text);
        }
    }
}
