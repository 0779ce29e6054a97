//! `{name}` / `{name.field}` placeholders shared by question and query
//! templates.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)(?:\.([A-Za-z_]+))?\}").expect("static regex"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placeholder<'t> {
    pub name: &'t str,
    pub field: Option<&'t str>,
    pub range: Range<usize>,
}

impl Placeholder<'_> {
    /// `name` or `name.field`, as written between the braces.
    pub fn key(&self) -> String {
        match self.field {
            Some(f) => format!("{}.{f}", self.name),
            None => self.name.to_string(),
        }
    }
}

pub fn placeholders(text: &str) -> Vec<Placeholder<'_>> {
    PLACEHOLDER
        .captures_iter(text)
        .map(|c| Placeholder {
            name: c.get(1).expect("group").as_str(),
            field: c.get(2).map(|m| m.as_str()),
            range: c.get(0).expect("match").range(),
        })
        .collect()
}

/// Substitutes every placeholder in one pass. Returns the keys `lookup`
/// could not supply as the error.
pub fn substitute(text: &str, mut lookup: impl FnMut(&Placeholder<'_>) -> Option<String>) -> Result<String, Vec<String>> {
    let mut out = String::with_capacity(text.len());
    let mut missing = Vec::new();
    let mut last = 0;
    for p in placeholders(text) {
        out.push_str(&text[last..p.range.start]);
        match lookup(&p) {
            Some(v) => out.push_str(&v),
            None => missing.push(p.key()),
        }
        last = p.range.end;
    }
    out.push_str(&text[last..]);
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(missing)
    }
}
