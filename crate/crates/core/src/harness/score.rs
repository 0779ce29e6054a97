//! Normalized exact-match scoring of free-text answers.

use rust_decimal::Decimal;
use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

use crate::forge::ResponseType;

fn normalize(text: &str) -> String {
    text.trim().nfc().collect()
}

fn boolean(text: &str) -> Option<bool> {
    match text.to_lowercase().trim_end_matches('.') {
        "yes" | "true" => Some(true),
        "no" | "false" => Some(false),
        _ => None,
    }
}

fn number(text: &str) -> Option<Decimal> {
    text.trim_end_matches('.').parse::<Decimal>().ok()
}

fn unquote(text: &str) -> String {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::String(s)) => normalize(&s),
        _ => text.to_string(),
    }
}

/// Whether one predicted scalar matches one gold item.
fn scalar_matches(prediction: &str, gold: &Value) -> bool {
    let prediction = unquote(prediction);
    match gold {
        Value::Bool(b) => boolean(&prediction) == Some(*b),
        Value::Number(n) => match (number(&prediction), n.to_string().parse::<Decimal>()) {
            (Some(p), Ok(g)) => p == g,
            _ => false,
        },
        Value::String(s) => prediction == normalize(s),
        other => serde_json::from_str::<Value>(&prediction).is_ok_and(|p| p == *other),
    }
}

/// Splits a list prediction: a JSON array, or items separated by `;`.
fn list_items(prediction: &str) -> Vec<String> {
    if prediction.starts_with('[') {
        if let Ok(Value::Array(items)) = serde_json::from_str::<Value>(prediction) {
            return items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => normalize(&s),
                    other => other.to_string(),
                })
                .collect();
        }
    }
    prediction
        .split(';')
        .map(normalize)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Trims and NFC-normalizes the prediction, maps yes/no/true/false for
/// booleans, parses numbers, and splits lists on `;` (or reads a JSON
/// array). Lists are order-sensitive; strings are case-sensitive.
pub fn score_exact_match(prediction: &str, gold: &Value, answer_type: ResponseType) -> bool {
    let prediction = normalize(prediction);
    match answer_type {
        ResponseType::Count => match (prediction.trim_end_matches('.').parse::<i64>(), gold.as_i64()) {
            (Ok(p), Some(g)) => p == g,
            _ => false,
        },
        ResponseType::Existence => gold.as_bool().is_some_and(|g| boolean(&prediction) == Some(g)),
        ResponseType::List => {
            let Some(gold) = gold.as_array() else { return false };
            let items = list_items(&prediction);
            items.len() == gold.len() && items.iter().zip(gold).all(|(p, g)| scalar_matches(p, g))
        }
        ResponseType::Exact => scalar_matches(&prediction, gold),
    }
}

/// Renders a gold answer the way a well-behaved model would state it;
/// the inverse of [`score_exact_match`].
pub fn render_answer(gold: &Value) -> String {
    match gold {
        Value::Bool(true) => "yes".into(),
        Value::Bool(false) => "no".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(render_answer).collect::<Vec<_>>().join("; "),
        other => other.to_string(),
    }
}
