//! Run configuration. Every default reproduces the published protocol.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CenteringMode {
    /// Subtract the per-layer vocabulary mean before cosine similarity.
    #[default]
    Centered,
    /// Use hidden states as extracted (ablation).
    Raw,
}

impl CenteringMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CenteringMode::Centered => "centered",
            CenteringMode::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParadigmConfig {
    /// Candidates shown per forced-choice trial.
    pub candidate_set_size: usize,
    /// Words the participant must pick per forced-choice trial.
    pub n_picks: usize,
    /// Associates requested per free-association run.
    pub fa_words_per_run: usize,
    /// Free-association runs per cue.
    pub fa_runs: usize,
}

impl Default for ParadigmConfig {
    fn default() -> Self {
        ParadigmConfig { candidate_set_size: 16, n_picks: 2, fa_words_per_run: 5, fa_runs: 126 }
    }
}

/// Decoding and retry settings for behavioral collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectionConfig {
    /// Upper bound on trials in flight at once.
    pub batch_size: usize,
    pub fc_max_new_tokens: u32,
    pub fa_max_new_tokens: u32,
    /// Issue the deterministic repair turn after a non-compliant FC answer.
    pub repair: bool,
    /// Sampled FC retries after the repair turn.
    pub max_retries: u32,
    pub retry_temperature: f64,
    pub retry_top_p: f64,
    pub fa_temperature: f64,
    pub fa_top_p: f64,
}

impl Default for CollectionConfig {
    fn default() -> Self {
        CollectionConfig {
            batch_size: 128,
            fc_max_new_tokens: 10,
            fa_max_new_tokens: 25,
            repair: true,
            max_retries: 5,
            retry_temperature: 0.5,
            retry_top_p: 0.9,
            fa_temperature: 0.7,
            fa_top_p: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RidgeConfig {
    pub train_fraction: f64,
    pub n_train_pairs: usize,
    pub alpha_grid_lo: f64,
    pub alpha_grid_hi: f64,
    pub alpha_grid_n: usize,
    pub cv_folds: usize,
    /// Refit predictor standardization inside every CV fold. When false the
    /// statistics of the whole training set are used for all folds.
    pub standardize_per_fold: bool,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            train_fraction: 0.8,
            n_train_pairs: 100_000,
            alpha_grid_lo: 1e-2,
            alpha_grid_hi: 1e6,
            alpha_grid_n: 15,
            cv_folds: 5,
            standardize_per_fold: true,
        }
    }
}

impl RidgeConfig {
    /// Log-spaced regularization grid; the endpoints are exactly `lo` and `hi`.
    pub fn alpha_grid(&self) -> Vec<f64> {
        log_space(self.alpha_grid_lo, self.alpha_grid_hi, self.alpha_grid_n)
    }
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (libm::log10(lo), libm::log10(hi));
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    i => libm::pow(10.0, a + step * i as f64),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub master_seed: u64,
    pub paradigm: ParadigmConfig,
    pub collection: CollectionConfig,
    /// Word pairs sampled for RSA.
    pub rsa_sample_pairs: usize,
    pub nn_k_list: Vec<usize>,
    /// Ranks of the low-rank behavioral variants.
    pub svd_ranks: Vec<usize>,
    pub ridge: RidgeConfig,
    pub centering_mode: CenteringMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0x005E_ED0F_A55C,
            paradigm: ParadigmConfig::default(),
            collection: CollectionConfig::default(),
            rsa_sample_pairs: 500_000,
            nn_k_list: vec![5, 10, 20, 50, 100, 200],
            svd_ranks: vec![100, 300, 600],
            ridge: RidgeConfig::default(),
            centering_mode: CenteringMode::Centered,
        }
    }
}

fn bad<T>(msg: alloc::string::String) -> Result<T> {
    Err(Error::Config(msg))
}

impl RunConfig {
    /// Checks every invariant that does not depend on the vocabulary.
    pub fn validate(&self) -> Result<()> {
        let p = &self.paradigm;
        if p.n_picks < 1 {
            return bad(format!("n_picks must be >= 1, got {}", p.n_picks));
        }
        if p.candidate_set_size < p.n_picks + 1 {
            return bad(format!(
                "candidate_set_size ({}) must be at least n_picks + 1 ({})",
                p.candidate_set_size,
                p.n_picks + 1
            ));
        }
        if p.fa_words_per_run < 1 || p.fa_runs < 1 {
            return bad(format!(
                "fa_words_per_run and fa_runs must be >= 1, got {} and {}",
                p.fa_words_per_run, p.fa_runs
            ));
        }
        let c = &self.collection;
        if c.batch_size == 0 {
            return bad("collection.batch_size must be >= 1".into());
        }
        for (name, t, top_p) in [("retry", c.retry_temperature, c.retry_top_p), ("fa", c.fa_temperature, c.fa_top_p)] {
            if !(t > 0.0) || !(top_p > 0.0 && top_p <= 1.0) {
                return bad(format!("{name} sampling needs temperature > 0 and 0 < top_p <= 1 (got {t}, {top_p})"));
            }
        }
        let r = &self.ridge;
        if !(r.train_fraction > 0.0 && r.train_fraction < 1.0) {
            return bad(format!("train_fraction must be in (0, 1), got {}", r.train_fraction));
        }
        if r.cv_folds < 2 {
            return bad(format!("cv_folds must be >= 2, got {}", r.cv_folds));
        }
        if r.alpha_grid_n < 2 {
            return bad(format!("alpha_grid_n must be >= 2, got {}", r.alpha_grid_n));
        }
        if !(r.alpha_grid_lo > 0.0 && r.alpha_grid_hi > r.alpha_grid_lo) {
            return bad(format!("alpha grid needs 0 < lo < hi, got [{}, {}]", r.alpha_grid_lo, r.alpha_grid_hi));
        }
        if r.n_train_pairs == 0 {
            return bad("ridge.n_train_pairs must be >= 1".into());
        }
        if self.rsa_sample_pairs == 0 {
            return bad("rsa_sample_pairs must be >= 1".into());
        }
        if self.nn_k_list.is_empty() || self.nn_k_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("nn_k_list must be non-empty and strictly increasing, got {:?}", self.nn_k_list));
        }
        if self.nn_k_list[0] == 0 {
            return bad("nn_k_list entries must be >= 1".into());
        }
        if self.svd_ranks.contains(&0) {
            return bad("svd_ranks entries must be >= 1".into());
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the checks against a vocabulary size.
    pub fn validate_for_vocab(&self, vocab_size: usize) -> Result<()> {
        self.validate()?;
        if vocab_size < 2 {
            return Err(Error::VocabularyTooSmall(vocab_size));
        }
        if let Some(&k) = self.nn_k_list.iter().find(|&&k| k >= vocab_size) {
            return bad(format!("nn_k_list entry {k} must be smaller than the vocabulary size {vocab_size}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        cfg.validate_for_vocab(5000).unwrap();
        assert_eq!(cfg.paradigm.candidate_set_size, 16);
        assert_eq!(cfg.paradigm.n_picks, 2);
        assert_eq!(cfg.paradigm.fa_words_per_run, 5);
        assert_eq!(cfg.paradigm.fa_runs, 126);
        assert_eq!(cfg.rsa_sample_pairs, 500_000);
        assert_eq!(cfg.nn_k_list, [5, 10, 20, 50, 100, 200]);
        assert_eq!(cfg.ridge.n_train_pairs, 100_000);
        assert_eq!(cfg.centering_mode, CenteringMode::Centered);
    }

    #[test]
    fn alpha_grid_is_log_spaced() {
        let grid = RidgeConfig::default().alpha_grid();
        assert_eq!(grid.len(), 15);
        assert_eq!(grid[0], 1e-2);
        assert_eq!(grid[14], 1e6);
        let step = libm::log10(grid[1]) - libm::log10(grid[0]);
        for w in grid.windows(2) {
            assert!((libm::log10(w[1]) - libm::log10(w[0]) - step).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.paradigm.candidate_set_size = 2;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.ridge.train_fraction = 1.0;
        assert!(cfg.validate().is_err());

        let cfg = RunConfig { nn_k_list: vec![5, 5], ..Default::default() };
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.ridge.cv_folds = 1;
        assert!(cfg.validate().is_err());

        let cfg = RunConfig::default();
        assert!(matches!(cfg.validate_for_vocab(100), Err(Error::Config(_))));
    }
}
