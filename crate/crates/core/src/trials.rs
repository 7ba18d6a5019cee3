//! Forced-choice candidate partitions, free-association run schedules and
//! the verbatim prompt texts.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::seed::{cue_seed, fa_run_seed, Stream};
use crate::vocab::Vocabulary;

pub const FC_TEMPLATE: &str = include_str!("templates/fc_prompt.txt");
pub const FA_TEMPLATE: &str = include_str!("templates/fa_prompt.txt");
pub const FC_REPAIR_TEMPLATE: &str = include_str!("templates/fc_repair.txt");
pub const MEANING_TEMPLATE: &str = include_str!("templates/meaning_prompt.txt");

const CANDIDATES_LINE: &str = "candidates: [{candidate_list}]\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    #[serde(rename = "FC")]
    ForcedChoice,
    #[serde(rename = "FA")]
    FreeAssociation,
}

impl Paradigm {
    pub fn as_str(self) -> &'static str {
        match self {
            Paradigm::ForcedChoice => "FC",
            Paradigm::FreeAssociation => "FA",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "FC" | "fc" | "forced_choice" => Some(Paradigm::ForcedChoice),
            "FA" | "fa" | "free_association" => Some(Paradigm::FreeAssociation),
            _ => None,
        }
    }
}

/// One forced-choice trial: a cue and one group of its candidate partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcTrial {
    pub cue_id: usize,
    pub group_index: usize,
    pub candidate_ids: Vec<usize>,
    /// The cue seed that drove the shuffle.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaTrial {
    pub cue_id: usize,
    pub run_index: usize,
    pub sampling_seed: u64,
}

/// Number of forced-choice trials per cue: `ceil((|V| - 1) / set_size)`.
pub fn fc_trials_per_cue(vocab_size: usize, candidate_set_size: usize) -> usize {
    (vocab_size - 1).div_ceil(candidate_set_size)
}

/// The trials of a single cue. The other `|V| - 1` ids are shuffled once with
/// a stream seeded by the cue seed and cut into consecutive groups of
/// `candidate_set_size`; the last group keeps the remainder.
pub fn fc_trials_for_cue(vocab_size: usize, cue_id: usize, cfg: &RunConfig) -> Vec<FcTrial> {
    let seed = cue_seed(cfg.master_seed, cue_id);
    let mut others: Vec<usize> = (0..vocab_size).filter(|&w| w != cue_id).collect();
    Stream::new(seed).shuffle(&mut others);
    others
        .chunks(cfg.paradigm.candidate_set_size)
        .enumerate()
        .map(|(group_index, chunk)| FcTrial { cue_id, group_index, candidate_ids: chunk.to_vec(), seed })
        .collect()
}

/// All forced-choice trials, cue-major then group order.
pub fn generate_fc_trials(vocab: &Vocabulary, cfg: &RunConfig) -> Vec<FcTrial> {
    let n = vocab.len();
    let mut out = Vec::with_capacity(n * fc_trials_per_cue(n, cfg.paradigm.candidate_set_size));
    for cue in 0..n {
        out.extend(fc_trials_for_cue(n, cue, cfg));
    }
    out
}

pub fn fa_trials_for_cue(cue_id: usize, cfg: &RunConfig) -> impl Iterator<Item = FaTrial> + '_ {
    (0..cfg.paradigm.fa_runs).map(move |run_index| FaTrial {
        cue_id,
        run_index,
        sampling_seed: fa_run_seed(cfg.master_seed, cue_id, run_index),
    })
}

/// All free-association runs, cue-major then run order.
pub fn generate_fa_trials(vocab: &Vocabulary, cfg: &RunConfig) -> Vec<FaTrial> {
    (0..vocab.len()).flat_map(|cue| fa_trials_for_cue(cue, cfg)).collect()
}

fn join_words<'a>(words: impl Iterator<Item = &'a str>) -> String {
    let mut s = String::new();
    for (i, w) in words.enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(w);
    }
    s
}

fn fill(template: &str, n_picks: usize, cue: &str, candidates: &str) -> String {
    template
        .replace("{n_picks}", &alloc::format!("{n_picks}"))
        .replace("{input_word}", cue)
        .replace("{candidate_list}", candidates)
}

pub fn candidate_list(trial: &FcTrial, vocab: &Vocabulary) -> String {
    join_words(trial.candidate_ids.iter().map(|&id| vocab.word(id)))
}

/// The forced-choice prompt for one trial.
pub fn render_fc_prompt(trial: &FcTrial, vocab: &Vocabulary, cfg: &RunConfig) -> String {
    fill(FC_TEMPLATE, cfg.paradigm.n_picks, vocab.word(trial.cue_id), &candidate_list(trial, vocab))
}

/// The repair turn sent after a non-compliant forced-choice answer.
pub fn render_fc_repair(trial: &FcTrial, vocab: &Vocabulary, cfg: &RunConfig, reason: &str) -> String {
    fill(FC_REPAIR_TEMPLATE, cfg.paradigm.n_picks, vocab.word(trial.cue_id), &candidate_list(trial, vocab))
        .replace("{reason}", reason)
}

/// The free-association prompt. The template always asks for five words.
pub fn render_fa_prompt(cue: &str) -> String {
    FA_TEMPLATE.replace("{input_word}", cue)
}

/// Prompt context used when extracting hidden states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionPrompt {
    Meaning,
    TaskFc,
    TaskFa,
}

/// Extraction prompt text. `TaskFc` is the forced-choice template without
/// its final candidates line.
pub fn render_extraction_prompt(kind: ExtractionPrompt, cue: &str, n_picks: usize) -> String {
    match kind {
        ExtractionPrompt::Meaning => MEANING_TEMPLATE.replace("{input_word}", cue),
        ExtractionPrompt::TaskFa => render_fa_prompt(cue),
        ExtractionPrompt::TaskFc => {
            let template = FC_TEMPLATE.replacen(CANDIDATES_LINE, "", 1);
            fill(&template, n_picks, cue, "")
        }
    }
}

/// What a prompt asks for, recovered from its text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedPrompt<'a> {
    ForcedChoice { cue: &'a str, candidates: Vec<&'a str> },
    FreeAssociation { cue: &'a str },
}

/// Recovers the cue (and candidates) from rendered prompt text. The last
/// `input word:` / `input:` line wins, so the worked example inside the
/// templates is skipped.
pub fn parse_prompt(text: &str) -> Option<ParsedPrompt<'_>> {
    let mut fc_cue = None;
    let mut fc_cands = None;
    let mut fa_cue = None;
    let mut fc_pos = 0;
    let mut fa_pos = 0;
    for (pos, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("input word: ") {
            fc_cue = Some(rest.trim());
            fc_pos = pos + 1;
            fc_cands = None;
        } else if let Some(rest) = line.strip_prefix("candidates: [") {
            // the worked example wraps over two lines; only one-line lists count
            if let Some(list) = rest.strip_suffix(']') {
                fc_cands = Some(list);
            }
        } else if let Some(rest) = line.strip_prefix("input: ") {
            fa_cue = Some(rest.trim().trim_end_matches('.'));
            fa_pos = pos + 1;
        }
    }
    if fa_pos > fc_pos {
        return fa_cue.map(|cue| ParsedPrompt::FreeAssociation { cue });
    }
    match (fc_cue, fc_cands) {
        (Some(cue), Some(list)) => {
            Some(ParsedPrompt::ForcedChoice { cue, candidates: list.split(", ").filter(|w| !w.is_empty()).collect() })
        }
        _ => None,
    }
}
