//! JSON-lines files: the trial manifest and the stream of trial records.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use assocgeom_core::harness::{Trial, TrialRecord};
use assocgeom_core::trials::{FaTrial, FcTrial};
use assocgeom_core::vocab::Vocabulary;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

/// One manifest line; the word fields are for readers, ids are authoritative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "paradigm")]
pub enum TrialLine {
    #[serde(rename = "FC")]
    Fc { cue_id: usize, cue: String, group_index: usize, candidate_ids: Vec<usize>, candidates: Vec<String>, seed: u64 },
    #[serde(rename = "FA")]
    Fa { cue_id: usize, cue: String, run_index: usize, sampling_seed: u64 },
}

impl TrialLine {
    pub fn new(trial: &Trial, vocab: &Vocabulary) -> TrialLine {
        match trial {
            Trial::Fc(t) => TrialLine::Fc {
                cue_id: t.cue_id,
                cue: vocab.word(t.cue_id).to_string(),
                group_index: t.group_index,
                candidate_ids: t.candidate_ids.clone(),
                candidates: t.candidate_ids.iter().map(|&i| vocab.word(i).to_string()).collect(),
                seed: t.seed,
            },
            Trial::Fa(t) => TrialLine::Fa {
                cue_id: t.cue_id,
                cue: vocab.word(t.cue_id).to_string(),
                run_index: t.run_index,
                sampling_seed: t.sampling_seed,
            },
        }
    }

    pub fn into_trial(self) -> Trial {
        match self {
            TrialLine::Fc { cue_id, group_index, candidate_ids, seed, .. } => {
                Trial::Fc(FcTrial { cue_id, group_index, candidate_ids, seed })
            }
            TrialLine::Fa { cue_id, run_index, sampling_seed, .. } => {
                Trial::Fa(FaTrial { cue_id, run_index, sampling_seed })
            }
        }
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    fsutil::write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, &item).map_err(|e| Error::malformed(path, e.to_string()))?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

/// Every complete line. A final line without a newline is an interrupted
/// write and is ignored.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fsutil::read_to_string(path)?;
    let complete = match text.rfind('\n') {
        Some(end) => &text[..=end],
        None => "",
    };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::malformed(path, format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn write_trials(path: &Path, trials: &[Trial], vocab: &Vocabulary) -> Result<()> {
    write_jsonl(path, trials.iter().map(|t| TrialLine::new(t, vocab)))
}

pub fn read_trials(path: &Path, vocab: &Vocabulary) -> Result<Vec<Trial>> {
    let lines: Vec<TrialLine> = read_jsonl(path)?;
    lines
        .into_iter()
        .map(|l| {
            let t = l.into_trial();
            let (cue, cands): (usize, &[usize]) = match &t {
                Trial::Fc(f) => (f.cue_id, &f.candidate_ids),
                Trial::Fa(f) => (f.cue_id, &[]),
            };
            for &id in std::iter::once(&cue).chain(cands) {
                vocab.check_id(id)?;
            }
            Ok(t)
        })
        .collect()
}

/// Appends records to a JSON-lines file, one flush per batch.
pub struct RecordSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl RecordSink {
    /// Opens for appending after `keep` complete lines, dropping anything
    /// after them (a partial line from an interrupted run).
    pub fn open(path: &Path, keep: usize) -> Result<RecordSink> {
        if let Some(parent) = path.parent() {
            fsutil::create_dir_all(parent)?;
        }
        let keep_bytes = if path.exists() { prefix_len(path, keep)? } else { 0 };
        let file =
            OpenOptions::new().create(true).write(true).truncate(false).open(path).map_err(|e| Error::io(path, e))?;
        file.set_len(keep_bytes).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        std::io::Seek::seek(&mut out, std::io::SeekFrom::End(0)).map_err(|e| Error::io(path, e))?;
        Ok(RecordSink { path: path.to_path_buf(), out })
    }

    pub fn push(&mut self, r: &TrialRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, r).map_err(|e| Error::malformed(&self.path, e.to_string()))?;
        self.out.write_all(b"\n").map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        self.out.get_ref().sync_data().map_err(|e| Error::io(&self.path, e))
    }
}

/// Byte length of the first `lines` complete lines.
fn prefix_len(path: &Path, lines: usize) -> Result<u64> {
    let mut r = fsutil::open(path)?;
    let mut total = 0u64;
    let mut buf = Vec::new();
    for _ in 0..lines {
        buf.clear();
        let n = r.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 || buf.last() != Some(&b'\n') {
            break;
        }
        total += n as u64;
    }
    Ok(total)
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    read_jsonl(path)
}

/// Streams complete records without holding the file in memory.
pub fn for_each_record(path: &Path, mut f: impl FnMut(TrialRecord) -> Result<()>) -> Result<()> {
    let mut r = fsutil::open(path)?;
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        let n = r.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 || buf.last() != Some(&b'\n') {
            return Ok(());
        }
        line += 1;
        if buf.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let rec = serde_json::from_slice(&buf).map_err(|e| Error::malformed(path, format!("line {line}: {e}")))?;
        f(rec)?;
    }
}
