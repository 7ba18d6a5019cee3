//! Stage bookkeeping: which inputs and settings produced which outputs, so
//! an unchanged stage can be skipped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    /// Path -> SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub config_hash: String,
    /// Seconds since the Unix epoch.
    pub completed_at: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub stages: BTreeMap<String, StageEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    Skipped,
}

fn key(out_dir: &Path, p: &Path) -> String {
    p.strip_prefix(out_dir).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

fn hashes(out_dir: &Path, paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths.iter().map(|p| Ok((key(out_dir, p), fsutil::sha256_file(p)?))).collect()
}

impl PipelineManifest {
    pub fn load(out_dir: &Path) -> Result<PipelineManifest> {
        let path = out_dir.join(FILE_NAME);
        if !path.exists() {
            return Ok(PipelineManifest::default());
        }
        serde_json::from_str(&fsutil::read_to_string(&path)?).map_err(|e| Error::malformed(&path, e.to_string()))
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fsutil::write_string(&out_dir.join(FILE_NAME), &(text + "\n"))
    }

    /// True when the stage ran with the same settings and inputs and its
    /// outputs are unchanged on disk.
    pub fn is_fresh(&self, out_dir: &Path, stage: &str, inputs: &[PathBuf], config_hash: &str) -> Result<bool> {
        let Some(entry) = self.stages.get(stage) else { return Ok(false) };
        if entry.config_hash != config_hash {
            return Ok(false);
        }
        if inputs.iter().any(|p| !p.exists()) || hashes(out_dir, inputs)? != entry.inputs {
            return Ok(false);
        }
        for (rel, hash) in &entry.outputs {
            let p = if Path::new(rel).is_absolute() { PathBuf::from(rel) } else { out_dir.join(rel) };
            if !p.exists() || fsutil::sha256_file(&p)? != *hash {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn record(
        &mut self,
        out_dir: &Path,
        stage: &str,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
        config_hash: &str,
    ) -> Result<()> {
        let completed_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let entry = StageEntry {
            inputs: hashes(out_dir, inputs)?,
            outputs: hashes(out_dir, outputs)?,
            config_hash: config_hash.to_string(),
            completed_at,
        };
        self.stages.insert(stage.to_string(), entry);
        Ok(())
    }
}

/// Runs `f` unless the manifest shows the stage is fresh, then records it.
/// `f` returns the files it wrote.
pub fn run_stage(
    out_dir: &Path,
    stage: &str,
    inputs: &[PathBuf],
    config_hash: &str,
    force: bool,
    f: impl FnOnce() -> Result<Vec<PathBuf>>,
) -> Result<StageOutcome> {
    let mut m = PipelineManifest::load(out_dir)?;
    if !force && m.is_fresh(out_dir, stage, inputs, config_hash)? {
        log::info!("{stage}: up to date");
        return Ok(StageOutcome::Skipped);
    }
    let outputs = f()?;
    m.record(out_dir, stage, inputs, &outputs, config_hash)?;
    m.save(out_dir)?;
    Ok(StageOutcome::Ran)
}
