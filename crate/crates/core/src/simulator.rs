//! A participant that answers from a known embedding: choices are sampled
//! from a softmax over cosine similarity to the cue, so the behavioral
//! geometry it produces has a known ground truth.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::config::ParadigmConfig;
use crate::harness::{request_key, DecodeParams, Message, Participant, Role};
use crate::linalg::{dot, norm};
use crate::seed::{derive, tag, Stream};
use crate::similarity::{cosine_dense, SimilarityMatrix, SourceTag};
use crate::trials::{parse_prompt, ParsedPrompt};
use crate::vocab::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PlantedGeometryParticipant {
    vocab: Vocabulary,
    dim: usize,
    /// Unit rows, `n x dim`.
    unit: Vec<f64>,
    /// Softmax temperature; 0 picks the most similar words.
    pub tau: f64,
    pub noise_seed: u64,
    pub n_picks: usize,
    pub fa_words: usize,
}

impl PlantedGeometryParticipant {
    /// Standard Gaussian embedding drawn from `seed`.
    pub fn seeded(vocab: Vocabulary, dim: usize, tau: f64, seed: u64) -> Result<Self> {
        let mut s = Stream::new(derive(seed, &[tag::SIMULATOR, 0]));
        let v = (0..vocab.len() * dim).map(|_| s.normal()).collect();
        Self::from_embeddings(vocab, v, dim, tau, derive(seed, &[tag::SIMULATOR, 1]))
    }

    /// Uses the given rows (normalized here) as the planted geometry.
    pub fn from_embeddings(
        vocab: Vocabulary,
        vectors: Vec<f64>,
        dim: usize,
        tau: f64,
        noise_seed: u64,
    ) -> Result<Self> {
        if dim == 0 || vectors.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} words of dimension {dim}",
                vectors.len(),
                vocab.len()
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::Config(format!("temperature must be finite and non-negative, got {tau}")));
        }
        let mut unit = vectors;
        for row in unit.chunks_mut(dim) {
            let n = norm(row);
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Config("planted embedding has a zero or non-finite row".into()));
            }
            row.iter_mut().for_each(|x| *x /= n);
        }
        let p = ParadigmConfig::default();
        Ok(PlantedGeometryParticipant {
            vocab,
            dim,
            unit,
            tau,
            noise_seed,
            n_picks: p.n_picks,
            fa_words: p.fa_words_per_run,
        })
    }

    pub fn with_counts(mut self, n_picks: usize, fa_words: usize) -> Self {
        self.n_picks = n_picks;
        self.fa_words = fa_words;
        self
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Unit-normalized rows.
    pub fn embedding(&self) -> &[f64] {
        &self.unit
    }

    /// Cosine geometry of the planted embedding.
    pub fn planted_similarity(&self) -> SimilarityMatrix {
        cosine_dense(&self.unit, self.vocab.len(), self.dim, SourceTag::Planted)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.unit[i * self.dim..(i + 1) * self.dim]
    }

    /// `k` of `options` without replacement: Gumbel top-k on `cos / tau`,
    /// or the `k` most similar when `tau == 0`. Ties go to the earlier option.
    pub fn choose(&self, cue: usize, options: &[usize], k: usize, rng: &mut Stream) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = options
            .iter()
            .enumerate()
            .map(|(pos, &w)| {
                let c = dot(self.row(cue), self.row(w));
                let s = if self.tau == 0.0 { c } else { c / self.tau + rng.gumbel() };
                (s, pos)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(k).map(|(_, pos)| options[pos]).collect()
    }

    fn answer(&self, prompt: &str, rng: &mut Stream) -> Result<String> {
        match parse_prompt(prompt) {
            Some(ParsedPrompt::ForcedChoice { cue, candidates }) => {
                let cue_id = self.vocab.require_id(cue)?;
                let options: Vec<usize> = candidates.iter().filter_map(|w| self.vocab.id(w)).collect();
                let picks = self.choose(cue_id, &options, self.n_picks, rng);
                Ok(format!("output: {}", self.join(&picks)))
            }
            Some(ParsedPrompt::FreeAssociation { cue }) => {
                let cue_id = self.vocab.require_id(cue)?;
                let options: Vec<usize> = (0..self.vocab.len()).filter(|&w| w != cue_id).collect();
                let picks = self.choose(cue_id, &options, self.fa_words, rng);
                Ok(format!("output: {}.", self.join(&picks)))
            }
            None => Ok(String::from("I am not sure what you are asking.")),
        }
    }

    fn join(&self, ids: &[usize]) -> String {
        ids.iter().map(|&i| self.vocab.word(i)).collect::<Vec<_>>().join(", ")
    }
}

impl Participant for PlantedGeometryParticipant {
    fn complete(&self, messages: &[Message], decode: &DecodeParams) -> Result<String> {
        let prompt = messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str()).unwrap_or("");
        let mut rng = Stream::new(derive(self.noise_seed, &[tag::SIMULATOR, request_key(messages, decode)]));
        self.answer(prompt, &mut rng)
    }

    fn supports_seeded_sampling(&self) -> bool {
        true
    }
}
