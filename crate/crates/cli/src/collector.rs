//! Drives trials against a participant in batches and streams the records
//! to disk in trial order.

use std::path::Path;

use assocgeom_core::config::RunConfig;
use assocgeom_core::harness::{run_trial, CollectionSummary, Participant, Trial, TrialRecord};
use assocgeom_core::vocab::Vocabulary;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::records::{read_records, RecordSink};

fn matches(trial: &Trial, r: &TrialRecord) -> bool {
    let (cue, index) = match trial {
        Trial::Fc(t) => (t.cue_id, t.group_index),
        Trial::Fa(t) => (t.cue_id, t.run_index),
    };
    r.paradigm == trial.paradigm() && r.cue_id == cue && r.trial_index == index
}

/// Runs `trials` and writes one record per trial to `path`. Trials within a
/// batch of `collection.batch_size` run concurrently; records are written in
/// trial order and flushed per batch. With `resume`, records already in the
/// file are kept (after checking they line up with the trials) and
/// collection continues after them.
pub fn collect_to_file<P>(
    trials: &[Trial],
    participant: &P,
    vocab: &Vocabulary,
    cfg: &RunConfig,
    path: &Path,
    resume: bool,
) -> Result<CollectionSummary>
where
    P: Participant + Sync + ?Sized,
{
    let mut summary = CollectionSummary::default();
    let done = if resume && path.exists() {
        let existing = read_records(path)?;
        if existing.len() > trials.len() {
            return Err(Error::malformed(path, "more records than trials in the manifest"));
        }
        for (i, (t, r)) in trials.iter().zip(&existing).enumerate() {
            if !matches(t, r) {
                return Err(Error::malformed(
                    path,
                    format!("record {} does not match trial {i} of the manifest", i + 1),
                ));
            }
            summary.add(r);
        }
        if !existing.is_empty() {
            log::info!("{}: resuming after {} of {} trials", path.display(), existing.len(), trials.len());
        }
        existing.len()
    } else {
        0
    };
    let mut sink = RecordSink::open(path, done)?;
    for batch in trials[done..].chunks(cfg.collection.batch_size) {
        let results: Vec<_> = batch.par_iter().map(|t| run_trial(participant, t, vocab, cfg)).collect();
        let mut failure = None;
        for r in results {
            match r {
                Ok(record) => {
                    summary.add(&record);
                    sink.push(&record)?;
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        sink.flush()?;
        if let Some(e) = failure {
            return Err(e.into());
        }
    }
    Ok(summary)
}
