//! Pulling the query or the final answer out of a completion.

use std::sync::LazyLock;

use regex::Regex;

static ANSWER_MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)answer:").expect("static regex"));

/// Content of the first fenced code block, else the last non-empty line.
pub fn extract_query(completion: &str) -> Option<String> {
    if let Some(start) = completion.find("```") {
        let after = &completion[start + 3..];
        if let Some(end) = after.find("```") {
            let block = &after[..end];
            // drop an info string such as ```fhirpath
            let body = match block.split_once('\n') {
                Some((info, rest)) if !info.trim().contains(' ') => rest,
                _ => block,
            };
            let body = body.trim();
            if !body.is_empty() {
                return Some(body.to_string());
            }
        }
    }
    last_line(completion)
}

/// Text after the last `Answer:` marker (case-insensitive), else the last
/// non-empty line.
pub fn extract_answer(completion: &str) -> Option<String> {
    if let Some(m) = ANSWER_MARKER.find_iter(completion).last() {
        let rest = completion[m.end()..].trim_start();
        let first_line = rest.lines().next().unwrap_or("").trim();
        if !first_line.is_empty() {
            return Some(first_line.to_string());
        }
    }
    last_line(completion)
}

fn last_line(text: &str) -> Option<String> {
    text.lines().map(str::trim).rev().find(|l| !l.is_empty()).map(str::to_string)
}
