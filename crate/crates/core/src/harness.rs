//! Runs trials against a [`Participant`] with the compliance, repair and
//! retry protocol, and summarizes compliance.
//!
//! Forced choice: one greedy attempt, then (if enabled) one greedy repair
//! turn, then up to `max_retries` nucleus-sampled repair turns, stopping at
//! the first compliant answer. Each repair turn carries the original prompt,
//! the last invalid answer and a message restating the rules. Retry seeds are
//! a pure function of `(master_seed, cue, group, attempt)`.
//!
//! Free association: a single sampled attempt per run, no repair.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::compliance::{check_fa_compliance, check_fc_compliance, FailureReason};
use crate::config::RunConfig;
use crate::seed::{derive, fc_retry_seed, fnv1a, tag, Stream};
use crate::trials::{render_fa_prompt, render_fc_prompt, render_fc_repair, FaTrial, FcTrial, Paradigm};
use crate::vocab::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Greedy,
    Nucleus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub mode: DecodeMode,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
    pub seed: Option<u64>,
}

impl DecodeParams {
    pub fn greedy(max_new_tokens: u32) -> Self {
        DecodeParams { mode: DecodeMode::Greedy, temperature: 0.0, top_p: 1.0, max_new_tokens, seed: None }
    }

    pub fn nucleus(temperature: f64, top_p: f64, max_new_tokens: u32, seed: u64) -> Result<Self> {
        if !(temperature > 0.0) || !(top_p > 0.0 && top_p <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "nucleus sampling needs temperature > 0 and 0 < top_p <= 1, got {temperature}, {top_p}"
            )));
        }
        Ok(DecodeParams { mode: DecodeMode::Nucleus, temperature, top_p, max_new_tokens, seed: Some(seed) })
    }
}

/// Something that answers chat prompts: a live endpoint or a simulator.
///
/// Implementations must not keep conversational state between calls.
pub trait Participant {
    fn complete(&self, messages: &[Message], decode: &DecodeParams) -> Result<String>;

    fn supports_seeded_sampling(&self) -> bool {
        true
    }
}

impl<P: Participant + ?Sized> Participant for &P {
    fn complete(&self, messages: &[Message], decode: &DecodeParams) -> Result<String> {
        (**self).complete(messages, decode)
    }
    fn supports_seeded_sampling(&self) -> bool {
        (**self).supports_seeded_sampling()
    }
}

impl<P: Participant + ?Sized> Participant for Box<P> {
    fn complete(&self, messages: &[Message], decode: &DecodeParams) -> Result<String> {
        (**self).complete(messages, decode)
    }
    fn supports_seeded_sampling(&self) -> bool {
        (**self).supports_seeded_sampling()
    }
}

/// Stable key of a request, for participants that must answer
/// deterministically.
pub fn request_key(messages: &[Message], decode: &DecodeParams) -> u64 {
    let mut h = 0u64;
    for m in messages {
        let role = match m.role {
            Role::System => 1,
            Role::User => 2,
            Role::Assistant => 3,
        };
        h = derive(h, &[role, fnv1a(m.content.as_bytes())]);
    }
    match decode.seed {
        Some(s) => derive(h, &[1, s]),
        None => derive(h, &[0]),
    }
}

/// One behavioral observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub paradigm: Paradigm,
    pub cue_id: usize,
    pub cue: String,
    /// Group index for FC, run index for FA.
    pub trial_index: usize,
    pub raw_output: String,
    pub parsed_responses: Vec<String>,
    pub compliant: bool,
    pub attempts: u32,
    pub failure_reason: Option<FailureReason>,
}

impl TrialRecord {
    pub fn initially_compliant(&self) -> bool {
        self.compliant && self.attempts == 1
    }
}

/// Upper bound on FC attempts for a configuration.
pub fn max_fc_attempts(cfg: &RunConfig) -> u32 {
    1 + cfg.collection.repair as u32 + cfg.collection.max_retries
}

pub fn run_fc_trial<P: Participant + ?Sized>(
    participant: &P,
    trial: &FcTrial,
    vocab: &Vocabulary,
    cfg: &RunConfig,
) -> Result<TrialRecord> {
    let cc = &cfg.collection;
    let prompt = render_fc_prompt(trial, vocab, cfg);
    let mut messages = vec![Message::user(prompt.clone())];
    let mut attempts = 1u32;
    let mut raw = participant.complete(&messages, &DecodeParams::greedy(cc.fc_max_new_tokens))?;
    let mut outcome = check_fc_compliance(&raw, trial, vocab, cfg);

    let repairs = cc.repair as u32;
    while let Err(reason) = outcome {
        if attempts >= 1 + repairs + cc.max_retries {
            break;
        }
        messages = vec![
            Message::user(prompt.clone()),
            Message::assistant(raw.clone()),
            Message::user(render_fc_repair(trial, vocab, cfg, reason.describe())),
        ];
        attempts += 1;
        let decode = if attempts <= 1 + repairs {
            DecodeParams::greedy(cc.fc_max_new_tokens)
        } else {
            DecodeParams::nucleus(
                cc.retry_temperature,
                cc.retry_top_p,
                cc.fc_max_new_tokens,
                fc_retry_seed(cfg.master_seed, trial.cue_id, trial.group_index, attempts),
            )?
        };
        raw = participant.complete(&messages, &decode)?;
        outcome = check_fc_compliance(&raw, trial, vocab, cfg);
    }

    Ok(finish(Paradigm::ForcedChoice, trial.cue_id, trial.group_index, vocab, raw, outcome, attempts))
}

pub fn run_fa_trial<P: Participant + ?Sized>(
    participant: &P,
    trial: &FaTrial,
    vocab: &Vocabulary,
    cfg: &RunConfig,
) -> Result<TrialRecord> {
    let cc = &cfg.collection;
    let cue = vocab.word(trial.cue_id);
    let messages = [Message::user(render_fa_prompt(cue))];
    let decode = DecodeParams::nucleus(cc.fa_temperature, cc.fa_top_p, cc.fa_max_new_tokens, trial.sampling_seed)?;
    let raw = participant.complete(&messages, &decode)?;
    let outcome = check_fa_compliance(&raw, cue, cfg.paradigm.fa_words_per_run);
    Ok(finish(Paradigm::FreeAssociation, trial.cue_id, trial.run_index, vocab, raw, outcome, 1))
}

fn finish(
    paradigm: Paradigm,
    cue_id: usize,
    trial_index: usize,
    vocab: &Vocabulary,
    raw_output: String,
    outcome: core::result::Result<Vec<String>, FailureReason>,
    attempts: u32,
) -> TrialRecord {
    let (parsed_responses, failure_reason) = match outcome {
        Ok(words) => (words, None),
        Err(reason) => (Vec::new(), Some(reason)),
    };
    TrialRecord {
        paradigm,
        cue_id,
        cue: vocab.word(cue_id).into(),
        trial_index,
        raw_output,
        compliant: failure_reason.is_none(),
        parsed_responses,
        attempts,
        failure_reason,
    }
}

/// A trial of either paradigm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trial {
    Fc(FcTrial),
    Fa(FaTrial),
}

impl Trial {
    pub fn paradigm(&self) -> Paradigm {
        match self {
            Trial::Fc(_) => Paradigm::ForcedChoice,
            Trial::Fa(_) => Paradigm::FreeAssociation,
        }
    }
}

pub fn run_trial<P: Participant + ?Sized>(
    participant: &P,
    trial: &Trial,
    vocab: &Vocabulary,
    cfg: &RunConfig,
) -> Result<TrialRecord> {
    match trial {
        Trial::Fc(t) => run_fc_trial(participant, t, vocab, cfg),
        Trial::Fa(t) => run_fa_trial(participant, t, vocab, cfg),
    }
}

/// Compliance statistics for one paradigm. Merging is associative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceSummary {
    pub total: u64,
    pub initially_compliant: u64,
    pub compliant: u64,
    pub attempts: u64,
    pub max_attempts: u32,
    pub failures: BTreeMap<FailureReason, u64>,
    /// Usable associations per cue id.
    pub usable_per_cue: BTreeMap<usize, u64>,
}

impl ComplianceSummary {
    pub fn add(&mut self, r: &TrialRecord) {
        self.total += 1;
        self.attempts += r.attempts as u64;
        self.max_attempts = self.max_attempts.max(r.attempts);
        if r.initially_compliant() {
            self.initially_compliant += 1;
        }
        if r.compliant {
            self.compliant += 1;
            *self.usable_per_cue.entry(r.cue_id).or_default() += r.parsed_responses.len() as u64;
        } else if let Some(reason) = r.failure_reason {
            *self.failures.entry(reason).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: &ComplianceSummary) {
        self.total += other.total;
        self.initially_compliant += other.initially_compliant;
        self.compliant += other.compliant;
        self.attempts += other.attempts;
        self.max_attempts = self.max_attempts.max(other.max_attempts);
        for (k, v) in &other.failures {
            *self.failures.entry(*k).or_default() += v;
        }
        for (k, v) in &other.usable_per_cue {
            *self.usable_per_cue.entry(*k).or_default() += v;
        }
    }

    pub fn initial_compliance_rate(&self) -> f64 {
        ratio(self.initially_compliant, self.total)
    }

    pub fn final_compliance_rate(&self) -> f64 {
        ratio(self.compliant, self.total)
    }

    pub fn usable_associations(&self) -> u64 {
        self.usable_per_cue.values().sum()
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionSummary {
    pub fc: ComplianceSummary,
    pub fa: ComplianceSummary,
}

impl CollectionSummary {
    pub fn add(&mut self, r: &TrialRecord) {
        match r.paradigm {
            Paradigm::ForcedChoice => self.fc.add(r),
            Paradigm::FreeAssociation => self.fa.add(r),
        }
    }

    pub fn merge(&mut self, other: &CollectionSummary) {
        self.fc.merge(&other.fc);
        self.fa.merge(&other.fa);
    }
}

/// Runs trials in order, handing each record to `sink`.
pub fn collect<'a, P, I, F>(
    trials: I,
    participant: &P,
    vocab: &Vocabulary,
    cfg: &RunConfig,
    mut sink: F,
) -> Result<CollectionSummary>
where
    P: Participant + ?Sized,
    I: IntoIterator<Item = &'a Trial>,
    F: FnMut(&TrialRecord) -> Result<()>,
{
    let mut summary = CollectionSummary::default();
    for trial in trials {
        let record = run_trial(participant, trial, vocab, cfg)?;
        summary.add(&record);
        sink(&record)?;
    }
    Ok(summary)
}

pub const MALFORMED_ANSWER: &str = "I am not sure which words to pick.";

/// Wraps a participant and replaces a fixed fraction of its answers with a
/// malformed one. Whether a given request is corrupted depends only on the
/// request and the injector seed.
#[derive(Debug, Clone)]
pub struct FaultInjector<P> {
    pub inner: P,
    pub rate: f64,
    pub seed: u64,
}

impl<P> FaultInjector<P> {
    pub fn new(inner: P, rate: f64, seed: u64) -> Self {
        FaultInjector { inner, rate, seed }
    }

    pub fn corrupts(&self, messages: &[Message], decode: &DecodeParams) -> bool {
        let key = request_key(messages, decode);
        Stream::new(derive(self.seed, &[tag::FAULT, key])).unit() < self.rate
    }
}

impl<P: Participant> Participant for FaultInjector<P> {
    fn complete(&self, messages: &[Message], decode: &DecodeParams) -> Result<String> {
        if self.corrupts(messages, decode) {
            Ok(MALFORMED_ANSWER.into())
        } else {
            self.inner.complete(messages, decode)
        }
    }

    fn supports_seeded_sampling(&self) -> bool {
        self.inner.supports_seeded_sampling()
    }
}
