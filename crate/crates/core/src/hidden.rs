//! Layerwise hidden-state word vectors, mean-centering and the cross-model
//! consensus geometry.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::CenteringMode;
use crate::similarity::{cosine_dense, SimilarityMatrix, SourceTag};
use crate::{Error, Result};

/// Prompt context the vectors were read out in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Mean over natural context sentences.
    Averaged,
    /// "What is the meaning of the word {w}?"
    Meaning,
    /// Forced-choice instruction without the candidate list.
    TaskFc,
    /// Free-association instruction.
    TaskFa,
    /// Non-contextual reference vectors (e.g. FastText).
    Static,
}

impl Strategy {
    pub const CONTEXTUAL: [Strategy; 4] = [Strategy::Averaged, Strategy::Meaning, Strategy::TaskFc, Strategy::TaskFa];

    pub fn code(self) -> u8 {
        match self {
            Strategy::Averaged => 0,
            Strategy::Meaning => 1,
            Strategy::TaskFc => 2,
            Strategy::TaskFa => 3,
            Strategy::Static => 255,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Strategy::Averaged),
            1 => Some(Strategy::Meaning),
            2 => Some(Strategy::TaskFc),
            3 => Some(Strategy::TaskFa),
            255 => Some(Strategy::Static),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Averaged => "averaged",
            Strategy::Meaning => "meaning",
            Strategy::TaskFc => "task_fc",
            Strategy::TaskFa => "task_fa",
            Strategy::Static => "static",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "averaged" => Some(Strategy::Averaged),
            "meaning" => Some(Strategy::Meaning),
            "task_fc" => Some(Strategy::TaskFc),
            "task_fa" => Some(Strategy::TaskFa),
            "static" => Some(Strategy::Static),
            _ => None,
        }
    }
}

/// Word vectors of one model, strategy and layer, in vocabulary order.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerEmbeddings {
    pub model_id: String,
    pub strategy: Strategy,
    pub layer: u32,
    n: usize,
    d: usize,
    vectors: Vec<f64>,
}

impl LayerEmbeddings {
    /// Validates shape, layer and finiteness.
    pub fn new(
        model_id: impl Into<String>,
        strategy: Strategy,
        layer: u32,
        n: usize,
        d: usize,
        vectors: Vec<f64>,
    ) -> Result<Self> {
        if layer == 0 {
            return Err(Error::LayerZero);
        }
        if vectors.len() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "{n} words x {d} dims needs {} values, got {}",
                n * d,
                vectors.len()
            )));
        }
        if let Some(pos) = vectors.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: pos / d.max(1), col: pos % d.max(1) });
        }
        Ok(LayerEmbeddings { model_id: model_id.into(), strategy, layer, n, d, vectors })
    }

    pub fn from_f32(
        model_id: impl Into<String>,
        strategy: Strategy,
        layer: u32,
        n: usize,
        d: usize,
        vectors: &[f32],
    ) -> Result<Self> {
        Self::new(model_id, strategy, layer, n, d, vectors.iter().map(|&x| x as f64).collect())
    }

    pub fn n_words(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn tag(&self) -> SourceTag {
        SourceTag::Hidden { model: self.model_id.clone(), strategy: self.strategy, layer: self.layer }
    }

    fn with_vectors(&self, vectors: Vec<f64>) -> Self {
        LayerEmbeddings { vectors, ..self.clone_header() }
    }

    fn clone_header(&self) -> Self {
        LayerEmbeddings {
            model_id: self.model_id.clone(),
            strategy: self.strategy,
            layer: self.layer,
            n: self.n,
            d: self.d,
            vectors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    FullVocab,
    TrainWordsOnly,
    /// Zero mean: the raw (uncentered) ablation.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringStats {
    pub mean: Vec<f64>,
    pub fit_scope: FitScope,
}

impl CenteringStats {
    pub fn identity(d: usize) -> Self {
        CenteringStats { mean: vec![0.0; d], fit_scope: FitScope::Identity }
    }

    /// Mean over all words.
    pub fn fit_full(e: &LayerEmbeddings) -> Self {
        let ids: Vec<usize> = (0..e.n).collect();
        CenteringStats { mean: mean_of(e, &ids), fit_scope: FitScope::FullVocab }
    }

    /// Mean over the given (training) word ids only.
    pub fn fit_train(e: &LayerEmbeddings, train_ids: &[usize]) -> Result<Self> {
        if train_ids.is_empty() {
            return Err(Error::InsufficientData("no training words to fit centering".into()));
        }
        if let Some(&bad) = train_ids.iter().find(|&&i| i >= e.n) {
            return Err(Error::IdOutOfRange { id: bad, size: e.n });
        }
        Ok(CenteringStats { mean: mean_of(e, train_ids), fit_scope: FitScope::TrainWordsOnly })
    }

    /// Statistics for a centering mode: full-vocab or train-only mean when
    /// centered, identity when raw.
    pub fn for_mode(e: &LayerEmbeddings, mode: CenteringMode, train_ids: Option<&[usize]>) -> Result<Self> {
        match (mode, train_ids) {
            (CenteringMode::Raw, _) => Ok(Self::identity(e.d)),
            (CenteringMode::Centered, None) => Ok(Self::fit_full(e)),
            (CenteringMode::Centered, Some(ids)) => Self::fit_train(e, ids),
        }
    }
}

fn mean_of(e: &LayerEmbeddings, ids: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; e.d];
    for &i in ids {
        for (m, x) in mean.iter_mut().zip(e.vector(i)) {
            *m += x;
        }
    }
    let inv = 1.0 / ids.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    mean
}

/// Subtracts the fitted mean from every vector. Identity stats return the
/// input unchanged.
pub fn center(e: &LayerEmbeddings, stats: &CenteringStats) -> Result<LayerEmbeddings> {
    if stats.mean.len() != e.d {
        return Err(Error::DimensionMismatch(format!(
            "centering mean has {} dims, embeddings have {}",
            stats.mean.len(),
            e.d
        )));
    }
    if stats.fit_scope == FitScope::Identity {
        return Ok(e.clone());
    }
    let mut v = e.vectors.clone();
    for row in v.chunks_mut(e.d.max(1)) {
        for (x, m) in row.iter_mut().zip(&stats.mean) {
            *x -= m;
        }
    }
    Ok(e.with_vectors(v))
}

/// Cosine similarity over the rows as given (center first if required).
pub fn hidden_similarity(e: &LayerEmbeddings) -> SimilarityMatrix {
    cosine_dense(&e.vectors, e.n, e.d, e.tag())
}

/// Centers with the given mode and returns the similarity matrix.
pub fn centered_similarity(
    e: &LayerEmbeddings,
    mode: CenteringMode,
    train_ids: Option<&[usize]>,
) -> Result<SimilarityMatrix> {
    let stats = CenteringStats::for_mode(e, mode, train_ids)?;
    Ok(hidden_similarity(&center(e, &stats)?))
}

/// Entrywise mean of similarity matrices. Words masked in any input are
/// masked in the result (all-zero row).
pub fn mean_similarity(mats: &[SimilarityMatrix], tag: SourceTag) -> Result<SimilarityMatrix> {
    let first = mats.first().ok_or_else(|| Error::InsufficientData("no similarity matrices to average".into()))?;
    let n = first.len();
    let mut sum = vec![0.0; SimilarityMatrix::packed_len(n)];
    let mut mask = vec![false; n];
    for m in mats {
        if m.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "cannot average similarity matrices of sizes {n} and {}",
                m.len()
            )));
        }
        for (s, v) in sum.iter_mut().zip(m.packed()) {
            *s += v;
        }
        for (a, b) in mask.iter_mut().zip(m.mask()) {
            *a |= *b;
        }
    }
    let z = mats.len() as f64;
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            sum[k] = if mask[i] || mask[j] { 0.0 } else { sum[k] / z };
            k += 1;
        }
    }
    SimilarityMatrix::from_packed(n, sum, mask, tag)
}

/// Running entrywise mean of layer similarities for a consensus reference,
/// so layers can be streamed one at a time.
#[derive(Debug, Clone)]
pub struct ConsensusBuilder {
    target_model: String,
    mode: CenteringMode,
    train_ids: Option<Vec<usize>>,
    sum: Vec<f64>,
    mask: Vec<bool>,
    n: Option<usize>,
    strategy: Option<Strategy>,
    terms: usize,
}

impl ConsensusBuilder {
    pub fn new(target_model: &str, mode: CenteringMode, train_ids: Option<&[usize]>) -> Self {
        ConsensusBuilder {
            target_model: target_model.into(),
            mode,
            train_ids: train_ids.map(<[usize]>::to_vec),
            sum: Vec::new(),
            mask: Vec::new(),
            n: None,
            strategy: None,
            terms: 0,
        }
    }

    /// Adds one layer of another model; a layer of the target model is a
    /// leakage error.
    pub fn add(&mut self, e: &LayerEmbeddings) -> Result<()> {
        if e.model_id == self.target_model {
            return Err(Error::Leakage(format!(
                "consensus for {:?} was given layer {} of the target model itself",
                self.target_model, e.layer
            )));
        }
        let s = centered_similarity(e, self.mode, self.train_ids.as_deref())?;
        match self.n {
            None => {
                self.n = Some(e.n);
                self.sum = vec![0.0; s.packed().len()];
                self.mask = vec![false; e.n];
                self.strategy = Some(e.strategy);
            }
            Some(n) if n != e.n => {
                return Err(Error::DimensionMismatch(format!("consensus inputs cover {n} and {} words", e.n)))
            }
            Some(_) => {}
        }
        for (a, b) in self.sum.iter_mut().zip(s.packed()) {
            *a += b;
        }
        for (a, b) in self.mask.iter_mut().zip(s.mask()) {
            *a |= *b;
        }
        self.terms += 1;
        Ok(())
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Words masked in any input are masked in the result.
    pub fn finish(self) -> Result<SimilarityMatrix> {
        let n = self.n.ok_or_else(|| Error::InsufficientData("consensus needs at least one other model".into()))?;
        let z = self.terms as f64;
        let mut sum = self.sum;
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                sum[k] = if self.mask[i] || self.mask[j] { 0.0 } else { sum[k] / z };
                k += 1;
            }
        }
        let tag =
            SourceTag::Consensus { target: self.target_model, strategy: self.strategy.unwrap_or(Strategy::Static) };
        SimilarityMatrix::from_packed(n, sum, self.mask, tag)
    }
}

/// Cross-model consensus for `target_model`: the mean of the cosine
/// similarity matrices of every layer of every other model. Passing any
/// layer of the target model is a leakage error.
pub fn consensus(
    others: &[LayerEmbeddings],
    target_model: &str,
    mode: CenteringMode,
    train_ids: Option<&[usize]>,
) -> Result<SimilarityMatrix> {
    if let Some(e) = others.iter().find(|e| e.model_id == target_model) {
        return Err(Error::Leakage(format!(
            "consensus for {target_model:?} was given layer {} of the target model itself",
            e.layer
        )));
    }
    let mut b = ConsensusBuilder::new(target_model, mode, train_ids);
    for e in others {
        b.add(e)?;
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Stream;

    fn random(model: &str, layer: u32, n: usize, d: usize, seed: u64) -> LayerEmbeddings {
        let mut s = Stream::new(seed);
        let v = (0..n * d).map(|_| s.normal() + 2.0).collect();
        LayerEmbeddings::new(model, Strategy::Meaning, layer, n, d, v).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(LayerEmbeddings::new("m", Strategy::Meaning, 0, 1, 1, vec![1.0]), Err(Error::LayerZero));
        assert!(matches!(
            LayerEmbeddings::new("m", Strategy::Meaning, 1, 2, 2, vec![1.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert_eq!(
            LayerEmbeddings::new("m", Strategy::Meaning, 1, 2, 2, vec![1.0, 1.0, f64::NAN, 1.0]),
            Err(Error::NonFinite { row: 1, col: 0 })
        );
    }

    #[test]
    fn full_centering_zeroes_column_means() {
        let e = random("m", 1, 30, 6, 1);
        let c = center(&e, &CenteringStats::fit_full(&e)).unwrap();
        for k in 0..6 {
            let m: f64 = (0..30).map(|i| c.vector(i)[k]).sum::<f64>() / 30.0;
            assert!(m.abs() < 1e-6);
        }
    }

    #[test]
    fn centering_is_idempotent() {
        let e = random("m", 1, 30, 6, 2);
        let once = center(&e, &CenteringStats::fit_full(&e)).unwrap();
        let twice = center(&once, &CenteringStats::fit_full(&once)).unwrap();
        for (a, b) in once.vectors().iter().zip(twice.vectors()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn train_only_centering_leaves_test_mean() {
        let e = random("m", 1, 20, 4, 3);
        let train: Vec<usize> = (0..16).collect();
        let c = center(&e, &CenteringStats::fit_train(&e, &train).unwrap()).unwrap();
        let test_mean: f64 = (16..20).map(|i| c.vector(i)[0]).sum::<f64>() / 4.0;
        assert!(test_mean.abs() > 1e-6);
        let train_mean: f64 = (0..16).map(|i| c.vector(i)[0]).sum::<f64>() / 16.0;
        assert!(train_mean.abs() < 1e-12);
    }

    #[test]
    fn raw_mode_is_identity() {
        let e = random("m", 2, 10, 3, 4);
        let stats = CenteringStats::for_mode(&e, CenteringMode::Raw, None).unwrap();
        assert_eq!(center(&e, &stats).unwrap(), e);
    }

    #[test]
    fn similarity_scale_invariant() {
        let e = random("m", 1, 12, 5, 5);
        let c = center(&e, &CenteringStats::fit_full(&e)).unwrap();
        let mut s = Stream::new(9);
        let mut scaled = c.vectors().to_vec();
        for row in scaled.chunks_mut(5) {
            let f = 0.1 + 10.0 * s.unit();
            row.iter_mut().for_each(|x| *x *= f);
        }
        let c2 = LayerEmbeddings::new("m", Strategy::Meaning, 1, 12, 5, scaled).unwrap();
        let (a, b) = (hidden_similarity(&c), hidden_similarity(&c2));
        for (x, y) in a.packed().iter().zip(b.packed()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn consensus_single_layer_is_that_layer() {
        let e = random("other", 1, 8, 4, 6);
        let c = consensus(core::slice::from_ref(&e), "target", CenteringMode::Centered, None).unwrap();
        let s = centered_similarity(&e, CenteringMode::Centered, None).unwrap();
        assert_eq!(c.packed(), s.packed());
    }

    #[test]
    fn consensus_rejects_target() {
        let e = random("target", 1, 8, 4, 7);
        assert!(matches!(consensus(&[e], "target", CenteringMode::Centered, None), Err(Error::Leakage(_))));
    }

    #[test]
    fn opposite_matrices_cancel() {
        let e = random("a", 1, 6, 3, 8);
        let s = centered_similarity(&e, CenteringMode::Centered, None).unwrap();
        let neg = SimilarityMatrix::from_packed(
            6,
            s.packed().iter().map(|x| -x).collect(),
            s.mask().to_vec(),
            SourceTag::Planted,
        )
        .unwrap();
        let m = mean_similarity(&[s, neg], SourceTag::Planted).unwrap();
        assert!(m.packed().iter().all(|&x| x == 0.0));
    }
}
