//! Comparing two similarity geometries: sampled RSA (Pearson over
//! upper-triangle pairs) and k-nearest-neighbor overlap.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::par::map_range;
use crate::seed::Stream;
use crate::similarity::{SimilarityMatrix, SourceTag};
use crate::{Error, Result};

/// Distinct unordered word pairs `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSample {
    pub pairs: Vec<(u32, u32)>,
    pub seed: u64,
    /// Pairs available among unmasked words.
    pub available: u64,
}

impl PairSample {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_exhaustive(&self) -> bool {
        self.pairs.len() as u64 == self.available
    }
}

/// Number of unordered pairs among `m` items.
pub fn pair_count(m: usize) -> u64 {
    let m = m as u64;
    m * m.saturating_sub(1) / 2
}

/// Maps a linear index over the row-major upper triangle of an `m x m`
/// matrix (diagonal excluded) to `(a, b)`, `a < b`.
fn unrank_pair(k: u64, m: u64) -> (u64, u64) {
    // first index of row a is a*m - a(a+1)/2
    let offset = |a: u64| a * m - a * (a + 1) / 2;
    let (mut lo, mut hi) = (0u64, m - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if offset(mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = if offset(hi) <= k && hi < m - 1 { hi } else { lo };
    (a, a + 1 + (k - offset(a)))
}

/// Samples `n` pairs uniformly without replacement among the words whose
/// mask bit is false. When `n` reaches the number of available pairs every
/// pair is returned.
pub fn sample_pairs(vocab_size: usize, n: usize, seed: u64, mask: &[bool]) -> Result<PairSample> {
    if mask.len() != vocab_size {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries for a vocabulary of {vocab_size}",
            mask.len()
        )));
    }
    let ids: Vec<u32> = (0..vocab_size).filter(|&i| !mask[i]).map(|i| i as u32).collect();
    let m = ids.len() as u64;
    let available = pair_count(ids.len());
    let pairs = if n as u64 >= available {
        let mut out = Vec::with_capacity(available as usize);
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                out.push((ids[a], ids[b]));
            }
        }
        out
    } else {
        // Floyd's subset sampling over linear pair indices
        let mut rng = Stream::new(seed);
        let mut chosen = BTreeSet::new();
        for j in available - n as u64..available {
            let t = rng.below(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen
            .into_iter()
            .map(|k| {
                let (a, b) = unrank_pair(k, m);
                (ids[a as usize], ids[b as usize])
            })
            .collect()
    };
    Ok(PairSample { pairs, seed, available })
}

/// Words masked in any of the matrices.
pub fn union_mask<'a>(n: usize, mats: impl IntoIterator<Item = &'a SimilarityMatrix>) -> Vec<bool> {
    let mut mask = vec![false; n];
    for m in mats {
        for (a, b) in mask.iter_mut().zip(m.mask()) {
            *a |= *b;
        }
    }
    mask
}

/// Pearson correlation, two-pass. Errors if either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("Pearson needs at least two values".into()));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::ZeroVariance("first"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::ZeroVariance("second"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > 0.0) {
        return Err(Error::ZeroVariance("first"));
    }
    if !(syy > 0.0) {
        return Err(Error::ZeroVariance("second"));
    }
    Ok((sxy / (libm::sqrt(sxx) * libm::sqrt(syy))).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsaResult {
    pub layer: Option<u32>,
    pub reference: String,
    pub r: f64,
    pub n_pairs: usize,
}

fn layer_of(tag: &SourceTag) -> Option<u32> {
    match tag {
        SourceTag::Hidden { layer, .. } => Some(*layer),
        _ => None,
    }
}

fn check_same_size(a: &SimilarityMatrix, b: &SimilarityMatrix) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("similarity matrices over {} and {} words", a.len(), b.len())));
    }
    Ok(())
}

/// Pearson correlation of the two matrices over the sampled pairs.
pub fn rsa(hidden: &SimilarityMatrix, reference: &SimilarityMatrix, pairs: &PairSample) -> Result<RsaResult> {
    check_same_size(hidden, reference)?;
    let x: Vec<f64> = pairs.pairs.iter().map(|&(i, j)| hidden.get(i as usize, j as usize)).collect();
    let y: Vec<f64> = pairs.pairs.iter().map(|&(i, j)| reference.get(i as usize, j as usize)).collect();
    let r = pearson(&x, &y)?;
    Ok(RsaResult { layer: layer_of(hidden.tag()), reference: reference.tag().to_string(), r, n_pairs: x.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnResult {
    pub layer: Option<u32>,
    pub reference: String,
    pub k: usize,
    pub mean_overlap: f64,
    /// Per-word overlap; `None` for masked words.
    pub per_word: Vec<Option<f64>>,
    pub n_queries: usize,
    pub n_masked: usize,
}

/// Neighbor order: larger similarity first, ties by smaller index.
#[inline]
fn neighbor_order(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// The `k_max` nearest neighbors of `i` in order, excluding `i` and masked
/// words.
pub fn top_neighbors(s: &SimilarityMatrix, i: usize, k_max: usize, mask: &[bool]) -> Vec<u32> {
    let mut cands: Vec<(f64, u32)> =
        (0..s.len()).filter(|&j| j != i && !mask[j]).map(|j| (s.get(i, j), j as u32)).collect();
    let k = k_max.min(cands.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cands.len() {
        cands.select_nth_unstable_by(k - 1, neighbor_order);
        cands.truncate(k);
    }
    cands.sort_unstable_by(neighbor_order);
    cands.into_iter().map(|(_, j)| j).collect()
}

fn overlap(a: &[u32], b: &[u32]) -> usize {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// NN@k overlap for several `k` at once, using the full matrices. Words
/// masked in either matrix are neither queries nor neighbors.
pub fn nn_overlap_many(hidden: &SimilarityMatrix, reference: &SimilarityMatrix, ks: &[usize]) -> Result<Vec<NnResult>> {
    check_same_size(hidden, reference)?;
    let n = hidden.len();
    let mask = union_mask(n, [hidden, reference]);
    let n_masked = mask.iter().filter(|&&m| m).count();
    let available = n - n_masked;
    let k_max = ks.iter().copied().max().unwrap_or(0);
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k >= available) {
        return Err(Error::NeighborhoodTooLarge { k, available });
    }
    let mask_ref = &mask;
    let per_query: Vec<Option<Vec<usize>>> = map_range(n, |i| {
        if mask_ref[i] {
            return None;
        }
        let a = top_neighbors(hidden, i, k_max, mask_ref);
        let b = top_neighbors(reference, i, k_max, mask_ref);
        Some(ks.iter().map(|&k| overlap(&a[..k], &b[..k])).collect())
    });
    let results = ks
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            let per_word: Vec<Option<f64>> =
                per_query.iter().map(|q| q.as_ref().map(|c| c[slot] as f64 / k as f64)).collect();
            let sum: f64 = per_word.iter().flatten().sum();
            NnResult {
                layer: layer_of(hidden.tag()),
                reference: reference.tag().to_string(),
                k,
                mean_overlap: sum / available as f64,
                per_word,
                n_queries: available,
                n_masked,
            }
        })
        .collect();
    Ok(results)
}

pub fn nn_overlap(hidden: &SimilarityMatrix, reference: &SimilarityMatrix, k: usize) -> Result<NnResult> {
    Ok(nn_overlap_many(hidden, reference, &[k])?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rsa,
    Nn,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rsa => "rsa",
            Metric::Nn => "nn",
        }
    }
}

/// One value of a layerwise profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub layer: u32,
    pub reference: String,
    pub metric: Metric,
    pub k: Option<usize>,
    pub value: f64,
    /// Pairs for RSA, query words for NN.
    pub n: usize,
}

/// Min, max and mean of one (reference, metric, k) series across layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub reference: String,
    pub metric: Metric,
    pub k: Option<usize>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub n_layers: usize,
    pub excluded_layers: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub rows: Vec<ProfileRow>,
    pub summaries: Vec<ProfileSummary>,
}

/// Evaluates every layer against every reference: RSA over `pairs` and
/// NN@k for each `k`. A layer whose RSA hits a zero-variance vector is
/// excluded from that series and recorded; other errors abort.
pub fn layer_profile<I>(
    layers: I,
    references: &[SimilarityMatrix],
    pairs: &PairSample,
    ks: &[usize],
) -> Result<LayerProfile>
where
    I: IntoIterator<Item = Result<SimilarityMatrix>>,
{
    let mut rows = Vec::new();
    let mut excluded: Vec<(String, Metric, Option<usize>, u32)> = Vec::new();
    for hidden in layers {
        let hidden = hidden?;
        let layer = layer_of(hidden.tag()).unwrap_or(0);
        for reference in references {
            let name = reference.tag().to_string();
            match rsa(&hidden, reference, pairs) {
                Ok(res) => rows.push(ProfileRow {
                    layer,
                    reference: name.clone(),
                    metric: Metric::Rsa,
                    k: None,
                    value: res.r,
                    n: res.n_pairs,
                }),
                Err(Error::ZeroVariance(side)) => {
                    log::warn!("layer {layer} vs {name}: zero variance ({side}); excluded from RSA summary");
                    excluded.push((name.clone(), Metric::Rsa, None, layer));
                }
                Err(e) => return Err(e),
            }
            if !ks.is_empty() {
                for nn in nn_overlap_many(&hidden, reference, ks)? {
                    rows.push(ProfileRow {
                        layer,
                        reference: name.clone(),
                        metric: Metric::Nn,
                        k: Some(nn.k),
                        value: nn.mean_overlap,
                        n: nn.n_queries,
                    });
                }
            }
        }
    }
    let summaries = summarize(&rows, &excluded);
    Ok(LayerProfile { rows, summaries })
}

fn summarize(rows: &[ProfileRow], excluded: &[(String, Metric, Option<usize>, u32)]) -> Vec<ProfileSummary> {
    let mut keys: Vec<(String, Metric, Option<usize>)> = Vec::new();
    for r in rows {
        let key = (r.reference.clone(), r.metric, r.k);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (name, metric, k, _) in excluded {
        let key = (name.clone(), *metric, *k);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(reference, metric, k)| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.reference == reference && r.metric == metric && r.k == k)
                .map(|r| r.value)
                .collect();
            let excluded_layers =
                excluded.iter().filter(|e| e.0 == reference && e.1 == metric && e.2 == k).map(|e| e.3).collect();
            let (min, max, mean) = min_max_mean(&values);
            ProfileSummary { reference, metric, k, min, max, mean, n_layers: values.len(), excluded_layers }
        })
        .collect()
}

/// `(min, max, mean)`; NaN for an empty slice.
pub fn min_max_mean(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (min, max, mean)
}
