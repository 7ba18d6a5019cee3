//! Parsing and compliance checks for participant answers.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::trials::FcTrial;
use crate::vocab::{normalize_word, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureReason {
    /// No `output:` line, or an empty item in the list.
    Format,
    /// Wrong number of words.
    Count,
    /// A forced-choice pick that is not one of the candidates.
    OutOfSet,
    /// The cue itself appears among the responses.
    CueRepeat,
    /// The same word appears twice.
    Duplicate,
    /// A free-association item with whitespace inside it.
    MultiWord,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::Format => "FORMAT",
            FailureReason::Count => "COUNT",
            FailureReason::OutOfSet => "OUT_OF_SET",
            FailureReason::CueRepeat => "CUE_REPEAT",
            FailureReason::Duplicate => "DUPLICATE",
            FailureReason::MultiWord => "MULTI_WORD",
        }
    }

    /// Short human wording used in the repair turn.
    pub fn describe(self) -> &'static str {
        match self {
            FailureReason::Format => "it did not follow the format 'output: word1, word2'",
            FailureReason::Count => "it did not contain the required number of words",
            FailureReason::OutOfSet => "it contained a word that is not in the candidate list",
            FailureReason::CueRepeat => "it repeated the input word",
            FailureReason::Duplicate => "it repeated a word",
            FailureReason::MultiWord => "it contained a multi-word answer",
        }
    }
}

/// Extracts the comma-separated list after the first `output:` marker
/// (case-insensitive), up to the end of that line. A trailing period and
/// surrounding whitespace are dropped; items are case-folded.
pub fn parse_output_line(raw: &str) -> Result<Vec<String>, FailureReason> {
    let lower = raw.to_ascii_lowercase();
    let start = lower.find("output:").ok_or(FailureReason::Format)? + "output:".len();
    let rest = &raw[start..];
    let line = rest.split('\n').next().unwrap_or("");
    let body = line.trim().trim_end_matches('.').trim_end();
    if body.is_empty() {
        return Err(FailureReason::Format);
    }
    body.split(',')
        .map(|item| {
            let w = normalize_word(item);
            if w.is_empty() {
                Err(FailureReason::Format)
            } else {
                Ok(w)
            }
        })
        .collect()
}

fn has_duplicates(words: &[String]) -> bool {
    words.iter().enumerate().any(|(i, w)| words[..i].contains(w))
}

/// Forced-choice rule check against explicit cue and candidate words.
pub fn check_fc_words(raw: &str, cue: &str, candidates: &[&str], n_picks: usize) -> Result<Vec<String>, FailureReason> {
    let words = parse_output_line(raw)?;
    if words.len() != n_picks {
        return Err(FailureReason::Count);
    }
    if words.iter().any(|w| w == cue) {
        return Err(FailureReason::CueRepeat);
    }
    if has_duplicates(&words) {
        return Err(FailureReason::Duplicate);
    }
    if words.iter().any(|w| !candidates.contains(&w.as_str())) {
        return Err(FailureReason::OutOfSet);
    }
    Ok(words)
}

pub fn check_fc_compliance(
    raw: &str,
    trial: &FcTrial,
    vocab: &Vocabulary,
    cfg: &RunConfig,
) -> Result<Vec<String>, FailureReason> {
    let candidates: Vec<&str> = trial.candidate_ids.iter().map(|&i| vocab.word(i)).collect();
    check_fc_words(raw, vocab.word(trial.cue_id), &candidates, cfg.paradigm.n_picks)
}

fn valid_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '\''
}

/// Free-association rule check: `n_words` distinct single words, none equal
/// to the cue. A cue repetition invalidates the whole run.
pub fn check_fa_compliance(raw: &str, cue: &str, n_words: usize) -> Result<Vec<String>, FailureReason> {
    let words = parse_output_line(raw)?;
    if words.iter().any(|w| w.chars().any(char::is_whitespace)) {
        return Err(FailureReason::MultiWord);
    }
    if words.iter().any(|w| !w.chars().all(valid_word_char)) {
        return Err(FailureReason::Format);
    }
    if words.len() != n_words {
        return Err(FailureReason::Count);
    }
    if words.iter().any(|w| w == cue) {
        return Err(FailureReason::CueRepeat);
    }
    if has_duplicates(&words) {
        return Err(FailureReason::Duplicate);
    }
    Ok(words)
}
