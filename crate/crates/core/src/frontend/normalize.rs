//! Source text normalization.

use serde::Serialize;

use super::lexicon::Lexicon;
use super::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationReason {
    Spelling,
    Contraction,
    Case,
    PluralWeekday,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormalizationStep {
    pub original: String,
    pub replacement: String,
    pub reason: NormalizationReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct NormalizationTrace {
    pub steps: Vec<NormalizationStep>,
}

impl NormalizationTrace {
    /// Tokens that were out of vocabulary and repaired by spelling.
    pub fn spelling_repairs(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.reason == NormalizationReason::Spelling)
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

const CONTRACTIONS: [(&str, &[&str]); 3] = [
    ("can't", &["can", "not"]),
    ("cannot", &["can", "not"]),
    ("doesn't", &["does", "not"]),
];

/// Splits raw text into word chunks and `.` separators. Apostrophes stay
/// inside words so contractions can be looked up; other punctuation is
/// dropped.
pub(crate) fn tokenize(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in raw.chars() {
        if ch.is_alphanumeric() || ch == '\'' || ch == '\u{2019}' {
            cur.push(if ch == '\u{2019}' { '\'' } else { ch });
            continue;
        }
        if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        if ch == '.' {
            out.push(".".to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Normalizes one line of raw text into lexicon tokens.
///
/// Steps per token: contraction expansion, lowercasing, plural weekday
/// stripping (`tuesdays` -> `tuesday`), then repair of out-of-lexicon tokens
/// to the lexicographically smallest lexicon surface at edit distance 1
/// (adjacent transpositions count as one edit). A sentence-final `.` is
/// dropped; inner `.` tokens separate sentences of a discourse.
pub fn normalize(raw: &str, lex: &Lexicon) -> Result<(Vec<String>, NormalizationTrace), FrontendError> {
    let mut chunks = tokenize(raw);
    while chunks.last().map(String::as_str) == Some(".") {
        chunks.pop();
    }
    if chunks.is_empty() {
        return Err(FrontendError::EmptyInput);
    }
    let mut tokens = Vec::new();
    let mut trace = NormalizationTrace::default();
    for chunk in chunks {
        if chunk == "." {
            tokens.push(chunk);
            continue;
        }
        let lowered = chunk.to_lowercase();
        if let Some((_, expansion)) = CONTRACTIONS.iter().find(|(c, _)| *c == lowered) {
            trace.steps.push(NormalizationStep {
                original: chunk.clone(),
                replacement: expansion.join(" "),
                reason: NormalizationReason::Contraction,
            });
            tokens.extend(expansion.iter().map(|s| s.to_string()));
            continue;
        }
        let (token, step) = normalize_word(&chunk, &lowered, lex);
        trace.steps.extend(step);
        tokens.push(token);
    }
    Ok((tokens, trace))
}

fn normalize_word(original: &str, lowered: &str, lex: &Lexicon) -> (String, Option<NormalizationStep>) {
    let step = |replacement: &str, reason| {
        Some(NormalizationStep {
            original: original.to_string(),
            replacement: replacement.to_string(),
            reason,
        })
    };
    if lex.knows(lowered) {
        if original != lowered && !lex.is_proper_name(lowered) {
            return (lowered.to_string(), step(lowered, NormalizationReason::Case));
        }
        return (lowered.to_string(), None);
    }
    if let Some(stem) = lowered.strip_suffix('s') {
        if lex.is_weekday(stem) && lex.contains(stem) {
            return (stem.to_string(), step(stem, NormalizationReason::PluralWeekday));
        }
    }
    match spelling_candidate(lowered, lex) {
        Some(fix) => (fix.to_string(), step(fix, NormalizationReason::Spelling)),
        None => (lowered.to_string(), None),
    }
}

fn spelling_candidate<'a>(token: &str, lex: &'a Lexicon) -> Option<&'a str> {
    // `surfaces` is sorted, so the first hit is the lexicographic tie-break.
    lex.surfaces().find(|s| strsim::osa_distance(token, s) == 1)
}
