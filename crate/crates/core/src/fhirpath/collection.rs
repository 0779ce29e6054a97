use std::borrow::Cow;
use std::sync::Arc;

use serde_json::Value;

use crate::value::FhirValue;

/// Where an item came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    /// An element of a bundle resource: its `Type/id` and a path inside it.
    Element { resource: Arc<str>, path: String },
    /// Computed by the expression (literals, counts, arithmetic).
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item<'a> {
    pub(crate) value: Cow<'a, FhirValue>,
    pub(crate) origin: Origin,
    /// Type annotation for choice elements (`Quantity` for `valueQuantity`)
    /// and temporal literals (`dateTime`, `date`).
    pub(crate) type_name: Option<String>,
}

impl<'a> Item<'a> {
    pub fn value(&self) -> &FhirValue {
        &self.value
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn type_name(&self) -> Option<&str> {
        self.type_name.as_deref()
    }

    pub(crate) fn synthetic(value: FhirValue) -> Item<'a> {
        Item {
            value: Cow::Owned(value),
            origin: Origin::Synthetic,
            type_name: None,
        }
    }

    pub(crate) fn is_temporal_literal(&self) -> bool {
        matches!(
            self.type_name.as_deref(),
            Some("dateTime") | Some("date") | Some("DateTime") | Some("Date") | Some("instant")
        )
    }

    pub fn into_owned(self) -> Item<'static> {
        Item {
            value: Cow::Owned(self.value.into_owned()),
            origin: self.origin,
            type_name: self.type_name,
        }
    }
}

/// Ordered result of an evaluation. Absence is the empty collection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Collection<'a> {
    pub(crate) items: Vec<Item<'a>>,
}

impl<'a> Collection<'a> {
    pub fn items(&self) -> &[Item<'a>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &FhirValue> {
        self.items.iter().map(|i| i.value.as_ref())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.values().map(FhirValue::to_json).collect())
    }

    pub fn to_canonical_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("json values always serialize")
    }

    pub fn into_owned(self) -> Collection<'static> {
        Collection {
            items: self.items.into_iter().map(Item::into_owned).collect(),
        }
    }
}

impl<'a> From<Vec<Item<'a>>> for Collection<'a> {
    fn from(items: Vec<Item<'a>>) -> Self {
        Collection { items }
    }
}
