//! A hand-built 20-candidate paraphrase set with six known violations.

use std::collections::BTreeMap;

use fpqa_core::forge::{Holdout, QuestionTemplate, ResponseType, Sampler, SlotSpec};
use fpqa_core::forge::DateWindow;
use fpqa_core::paraphrase::{Embedder, ParaphraseError, Prompts, ScriptedGenerator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn template() -> QuestionTemplate {
    QuestionTemplate {
        template_id: "doses-window".into(),
        resource_type: "MedicationAdministration".into(),
        response_type: ResponseType::Count,
        question_text: "How many doses of {drug} were given to patient {patient_id} {w}?".into(),
        fhirpath_template: "MedicationAdministration.where(medicationCodeableConcept.coding.display = '{drug}' and effectiveDateTime >= @{w.start} and effectiveDateTime < @{w.end}).count()".into(),
        slots: vec![
            SlotSpec {
                name: "drug".into(),
                sampler: Sampler::CodeFromPath {
                    expression: "MedicationAdministration.medicationCodeableConcept.coding.display".into(),
                },
            },
            SlotSpec {
                name: "w".into(),
                sampler: Sampler::DateWindow {
                    choices: vec![DateWindow::ThisYear],
                },
            },
        ],
        holdout: Holdout::UnseenResource,
    }
}

pub const SURVIVORS: [&str; 14] = [
    "How many doses of {drug} were given to patient {patient_id} {w}?",
    "Count the {drug} administrations recorded for patient {patient_id} {w}.",
    "What number of {drug} doses did patient {patient_id} receive {w}?",
    "For patient {patient_id}, how often was {drug} administered {w}?",
    "Tally every administered dose of {drug} for patient {patient_id} {w}.",
    "{w}, how many times did patient {patient_id} get {drug}?",
    "Give the total count of {drug} doses charted {w} for patient {patient_id}.",
    "Patient {patient_id}: number of {drug} administrations {w}?",
    "How frequently was {drug} given to patient {patient_id} {w}?",
    "Report the quantity of {drug} doses administered to patient {patient_id} {w}.",
    "Across {w}, what is the dose count of {drug} for patient {patient_id}?",
    "Determine how many {drug} doses patient {patient_id} was given {w}.",
    "In total, how many administrations of {drug} occurred for patient {patient_id} {w}?",
    "List the number of times {drug} reached patient {patient_id} {w}.",
];

pub const MISSING_SLOT: &str = "How many doses of {drug} were given to patient {patient_id}?";
pub const UNKNOWN_SLOT: &str = "How many {dose} of {drug} did patient {patient_id} receive {w}?";
/// Exact copy of survivor 3.
pub const DUPLICATE: &str = "For patient {patient_id}, how often was {drug} administered {w}?";
/// Survivor 9 with " in total" inserted: distance 9.
pub const NEAR_COPY: &str = "Report the quantity of {drug} doses administered to patient {patient_id} {w} in total.";
pub const OFF_TOPIC: [&str; 2] = [
    "Where is parking available near the ward for patient {patient_id} and {drug} {w}?",
    "Was the weather pleasant for patient {patient_id} while on {drug} {w}?",
];

/// The 20 candidates in generation order.
pub fn candidates() -> Vec<&'static str> {
    let s = SURVIVORS;
    vec![
        s[0], s[1], MISSING_SLOT, s[2], s[3], DUPLICATE, s[4], s[5], OFF_TOPIC[0], s[6], s[7], UNKNOWN_SLOT, s[8],
        s[9], NEAR_COPY, s[10], s[11], OFF_TOPIC[1], s[12], s[13],
    ]
}

pub fn generator() -> ScriptedGenerator {
    let lines = candidates().into_iter().map(String::from).collect();
    ScriptedGenerator::new(BTreeMap::from([("default".to_string(), lines)]))
}

pub fn prompts() -> Prompts {
    Prompts {
        clinician: "Rephrase: {question}".into(),
        patient: "Rephrase for a patient: {question}".into(),
    }
}

/// Deterministic mock: on-topic texts share one direction, texts that
/// mention parking or weather point the orthogonal way.
pub struct TopicEmbedder;

impl Embedder for TopicEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ParaphraseError> {
        Ok(texts
            .iter()
            .map(|t| {
                if t.contains("parking") || t.contains("weather") {
                    vec![0.0, 1.0]
                } else {
                    vec![1.0, 0.0]
                }
            })
            .collect())
    }
}

/// Full-matrix edit distance over Unicode scalar values.
pub fn dp_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// `n` seeded triples of short strings over a mixed ASCII and accented alphabet.
pub fn random_triples(n: usize, seed: u64) -> Vec<(String, String, String)> {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', ' ', 'é', 'ü', 'ß', '{', '}', 'X', '日'];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = |rng: &mut ChaCha8Rng| -> String {
        let len = rng.random_range(0..24);
        (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
    };
    (0..n)
        .map(|_| {
            let a = word(&mut rng);
            // bias toward related strings so small distances are common
            let b = if rng.random_bool(0.5) {
                let mut chars: Vec<char> = a.chars().collect();
                for _ in 0..rng.random_range(0..4) {
                    if !chars.is_empty() {
                        let at = rng.random_range(0..chars.len());
                        chars[at] = ALPHABET[rng.random_range(0..ALPHABET.len())];
                    }
                }
                chars.into_iter().collect()
            } else {
                word(&mut rng)
            };
            let c = word(&mut rng);
            (a, b, c)
        })
        .collect()
}
