//! The TOML configuration file: protocol parameters plus data locations.
//!
//! ```toml
//! master_seed = 7
//! rsa_sample_pairs = 500000
//!
//! [paradigm]
//! fa_runs = 20
//!
//! [data]
//! vocab = "vocab.txt"
//! embeddings_dir = "embeddings"
//! strategies = ["meaning"]
//!
//! [[models]]
//! name = "my-model"
//! participant = "simulated:tau=0.2,dim=32"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use assocgeom_core::config::RunConfig;
use assocgeom_core::hidden::Strategy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSettings {
    pub vocab: PathBuf,
    pub embeddings_dir: PathBuf,
    /// Extraction strategies to evaluate (`averaged`, `meaning`, `task_fc`, `task_fa`).
    pub strategies: Vec<String>,
    /// Models whose layers feed the consensus reference; defaults to the
    /// evaluated models.
    pub hidden_models: Vec<String>,
    /// Static reference names under `<embeddings_dir>/references/`.
    pub fasttext: String,
    pub bert: String,
}

impl Default for DataSettings {
    fn default() -> Self {
        DataSettings {
            vocab: "vocab.txt".into(),
            embeddings_dir: "embeddings".into(),
            strategies: Strategy::CONTEXTUAL.iter().map(|s| s.as_str().to_string()).collect(),
            hidden_models: Vec::new(),
            fasttext: "fasttext".into(),
            bert: "bert".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    /// Participant spec used by `collect`, e.g. `http:url=...,model=...`.
    #[serde(default)]
    pub participant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Settings {
    #[serde(flatten)]
    pub run: RunConfig,
    pub data: DataSettings,
    pub models: Vec<ModelEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Settings {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Settings> {
        let mut s: Settings = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.base_dir = base_dir.to_path_buf();
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = fsutil::read_to_string(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
            other => other,
        })?;
        Settings::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("settings serialize to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        self.strategies()?;
        let mut names: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("model names must be unique".into()));
        }
        if names.iter().any(|n| n.is_empty() || n.contains(['/', '\\']) || *n == "references") {
            return Err(Error::Config(
                "model names must be non-empty, contain no path separators and not be \"references\"".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.resolve(&self.data.vocab)
    }

    pub fn embeddings_dir(&self) -> PathBuf {
        self.resolve(&self.data.embeddings_dir)
    }

    pub fn strategies(&self) -> Result<Vec<Strategy>> {
        self.data
            .strategies
            .iter()
            .map(|s| {
                Strategy::parse(s)
                    .filter(|s| *s != Strategy::Static)
                    .ok_or_else(|| Error::Config(format!("unknown extraction strategy {s:?}")))
            })
            .collect()
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models.iter().map(|m| m.name.clone()).collect()
    }

    pub fn hidden_models(&self) -> Vec<String> {
        if self.data.hidden_models.is_empty() {
            self.model_names()
        } else {
            self.data.hidden_models.clone()
        }
    }

    /// Hex SHA-256 of the canonical serialization; changes whenever any
    /// setting changes.
    pub fn hash(&self) -> String {
        fsutil::sha256_bytes(serde_json::to_string(self).expect("settings serialize").as_bytes())
    }
}
