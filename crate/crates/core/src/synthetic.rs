//! A toy world with known structure: a planted behavioral embedding and
//! hidden layers of several models that share part of it.
//!
//! Every word has a shared part `S` and a private part `Q`. The participant
//! answers from `[S, Q]`. Each layer of the target model holds
//! `[a S, a Q, noise]` plus a constant offset, with `a` growing with depth;
//! other models replace `Q` by their own private part, and the static
//! references (FT, BERT) see only `S` plus noise.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::behavior::{aggregate_counts, cosine_rows, ppmi};
use crate::config::{CenteringMode, RunConfig};
use crate::eval::{rsa, sample_pairs};
use crate::harness::{collect, CollectionSummary, Trial};
use crate::hidden::{consensus, hidden_similarity, LayerEmbeddings, Strategy};
use crate::ridge::{form_pairs, regress_layers, split_vocab, LayerRegression, Predictors};
use crate::seed::{derive, tag, Stream};
use crate::similarity::SourceTag;
use crate::simulator::PlantedGeometryParticipant;
use crate::trials::{generate_fa_trials, generate_fc_trials, Paradigm};
use crate::vocab::Vocabulary;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_words: usize,
    pub shared_dim: usize,
    pub private_dim: usize,
    pub noise_dim: usize,
    pub noise_scale: f64,
    pub offset_scale: f64,
    pub n_layers: u32,
    pub n_other_models: usize,
    pub fasttext_noise_dim: usize,
    pub bert_noise_dim: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_words: 200,
            shared_dim: 16,
            private_dim: 16,
            noise_dim: 16,
            noise_scale: 0.5,
            offset_scale: 3.0,
            n_layers: 4,
            n_other_models: 2,
            fasttext_noise_dim: 32,
            bert_noise_dim: 48,
            strategy: Strategy::Meaning,
            seed: 1,
        }
    }
}

pub const TARGET_MODEL: &str = "synthetic-target";

pub fn other_model_name(m: usize) -> String {
    format!("synthetic-other-{m}")
}

/// `w0000`, `w0001`, ...
pub fn synthetic_vocab(n: usize) -> Result<Vocabulary> {
    Vocabulary::from_words((0..n).map(|i| format!("w{i:04}")))
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub spec: SyntheticSpec,
    pub vocab: Vocabulary,
    /// `n x (shared_dim + private_dim)`, not normalized.
    pub planted: Vec<f64>,
    pub target_layers: Vec<LayerEmbeddings>,
    /// Every layer of every other model.
    pub other_layers: Vec<LayerEmbeddings>,
    pub fasttext: LayerEmbeddings,
    pub bert: LayerEmbeddings,
}

fn gaussian(s: &mut Stream, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * s.normal()).collect()
}

impl SyntheticWorld {
    pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticWorld> {
        let n = spec.n_words;
        let (ds, dq) = (spec.shared_dim, spec.private_dim);
        let vocab = synthetic_vocab(n)?;
        let stream = |k: u64| Stream::new(derive(spec.seed, &[tag::SYNTHETIC, k]));

        let shared = gaussian(&mut stream(0), n * ds, 1.0);
        let private = gaussian(&mut stream(1), n * dq, 1.0);
        let planted = concat_rows(n, &[(&shared, ds), (&private, dq)]);

        let layers_for = |model: String, private: &[f64], k: u64| -> Result<Vec<LayerEmbeddings>> {
            (1..=spec.n_layers)
                .map(|l| {
                    let mut s = stream(k + l as u64);
                    let a = 0.5 + 0.5 * l as f64 / spec.n_layers as f64;
                    let scaled_s: Vec<f64> = shared.iter().map(|x| a * x).collect();
                    let scaled_q: Vec<f64> = private.iter().map(|x| a * x).collect();
                    let noise = gaussian(&mut s, n * spec.noise_dim, spec.noise_scale);
                    let mut v = concat_rows(n, &[(&scaled_s, ds), (&scaled_q, dq), (&noise, spec.noise_dim)]);
                    let d = ds + dq + spec.noise_dim;
                    let offset = gaussian(&mut s, d, spec.offset_scale);
                    for row in v.chunks_mut(d) {
                        row.iter_mut().zip(&offset).for_each(|(x, o)| *x += o);
                    }
                    LayerEmbeddings::new(model.clone(), spec.strategy, l, n, d, v)
                })
                .collect()
        };

        let target_layers = layers_for(TARGET_MODEL.into(), &private, 100)?;
        let mut other_layers = Vec::new();
        for m in 0..spec.n_other_models {
            let base = 1000 * (m as u64 + 1);
            let own_private = gaussian(&mut stream(base), n * dq, 1.0);
            other_layers.extend(layers_for(other_model_name(m), &own_private, base)?);
        }

        let reference = |name: &str, noise_dim: usize, k: u64| {
            let noise = gaussian(&mut stream(k), n * noise_dim, 1.0);
            let v = concat_rows(n, &[(&shared, ds), (&noise, noise_dim)]);
            LayerEmbeddings::new(name, Strategy::Static, 1, n, ds + noise_dim, v)
        };
        let fasttext = reference("fasttext", spec.fasttext_noise_dim, 10)?;
        let bert = reference("bert", spec.bert_noise_dim, 11)?;

        Ok(SyntheticWorld { spec: spec.clone(), vocab, planted, target_layers, other_layers, fasttext, bert })
    }

    pub fn planted_dim(&self) -> usize {
        self.spec.shared_dim + self.spec.private_dim
    }

    /// The simulated participant answering from the planted embedding.
    pub fn participant(&self, tau: f64, noise_seed: u64) -> Result<PlantedGeometryParticipant> {
        PlantedGeometryParticipant::from_embeddings(
            self.vocab.clone(),
            self.planted.clone(),
            self.planted_dim(),
            tau,
            noise_seed,
        )
    }
}

/// Outcome of a full simulated run on a synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    /// RSA of the behavioral PPMI geometries against the planted one, over all pairs.
    pub r_fc: f64,
    pub r_fa: f64,
    pub summary: CollectionSummary,
    pub ridge: Vec<LayerRegression>,
}

/// Collects FC and FA behavior from the planted participant, compares the
/// PPMI geometries with the planted cosine geometry and runs the held-out
/// ridge protocol on the target model's layers.
pub fn recovery_experiment(world: &SyntheticWorld, tau: f64, cfg: &RunConfig) -> Result<RecoveryOutcome> {
    let vocab = &world.vocab;
    let participant = world
        .participant(tau, derive(cfg.master_seed, &[tag::SIMULATOR]))?
        .with_counts(cfg.paradigm.n_picks, cfg.paradigm.fa_words_per_run);
    let trials: Vec<Trial> = generate_fc_trials(vocab, cfg)
        .into_iter()
        .map(Trial::Fc)
        .chain(generate_fa_trials(vocab, cfg).into_iter().map(Trial::Fa))
        .collect();
    let mut records = Vec::with_capacity(trials.len());
    let summary = collect(&trials, &participant, vocab, cfg, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    let fc = aggregate_counts(&records, vocab, Paradigm::ForcedChoice)?;
    let fa = aggregate_counts(&records, vocab, Paradigm::FreeAssociation)?;
    let planted = participant.planted_similarity();
    let all = sample_pairs(vocab.len(), usize::MAX, 0, &vec![false; vocab.len()])?;
    let r_fc = rsa(&cosine_rows(&ppmi(&fc)?, SourceTag::FcPpmi), &planted, &all)?.r;
    let r_fa = rsa(&cosine_rows(&ppmi(&fa)?, SourceTag::FaPpmi), &planted, &all)?.r;

    let split = split_vocab(vocab.len(), cfg.ridge.train_fraction, derive(cfg.master_seed, &[tag::VOCAB_SPLIT]))?;
    let ft = hidden_similarity(&world.fasttext);
    let bert = hidden_similarity(&world.bert);
    let cons = consensus(&world.other_layers, TARGET_MODEL, CenteringMode::Centered, Some(&split.train))?;
    let fc_counts = cosine_rows(&fc.to_weighted(), SourceTag::FcCounts);
    let fa_counts = cosine_rows(&fa.to_weighted(), SourceTag::FaCounts);
    let predictors =
        Predictors { fasttext: &ft, bert: &bert, consensus: &cons, fc_counts: &fc_counts, fa_counts: &fa_counts };
    let pairs =
        form_pairs(&split, &predictors.mask(), cfg.ridge.n_train_pairs, derive(cfg.master_seed, &[tag::TRAIN_PAIRS]))?;
    let ridge = regress_layers(&split, &pairs, &predictors, &world.target_layers, &cfg.ridge, cfg.master_seed)?;
    Ok(RecoveryOutcome { r_fc, r_fa, summary, ridge })
}

/// Horizontal concatenation of row-major blocks with `n` rows each.
fn concat_rows(n: usize, blocks: &[(&Vec<f64>, usize)]) -> Vec<f64> {
    let width: usize = blocks.iter().map(|b| b.1).sum();
    let mut out = Vec::with_capacity(n * width);
    for i in 0..n {
        for (data, d) in blocks {
            out.extend_from_slice(&data[i * d..(i + 1) * d]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let w = SyntheticWorld::generate(&SyntheticSpec { n_words: 30, ..Default::default() }).unwrap();
        assert_eq!(w.target_layers.len(), 4);
        assert_eq!(w.other_layers.len(), 8);
        assert_eq!(w.target_layers[0].dim(), 48);
        assert_eq!(w.fasttext.dim(), 48);
        assert_eq!(w.bert.dim(), 64);
        assert_eq!(w.vocab.word(7), "w0007");
        assert!(w.other_layers.iter().all(|e| e.model_id != TARGET_MODEL));
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec { n_words: 20, ..Default::default() };
        let a = SyntheticWorld::generate(&spec).unwrap();
        let b = SyntheticWorld::generate(&spec).unwrap();
        assert_eq!(a.planted, b.planted);
        assert_eq!(a.target_layers, b.target_layers);
        assert_ne!(a.target_layers[0].vectors(), a.target_layers[1].vectors());
    }
}
