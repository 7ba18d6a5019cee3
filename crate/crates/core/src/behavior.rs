//! Cue-response count matrices and the behavioral similarity geometries
//! derived from them: PPMI weighting, row cosine and truncated SVD.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::harness::TrialRecord;
use crate::linalg::symmetric_eigen;
use crate::par::map_range;
use crate::similarity::{cosine_dense, SimilarityMatrix, SourceTag};
use crate::trials::Paradigm;
use crate::vocab::{normalize_word, Vocabulary};
use crate::{Error, Result};

/// Sparse joint rows plus row and column marginals.
pub type Probabilities = (Vec<Vec<(u32, f64)>>, Vec<f64>, Vec<f64>);

/// Accumulates counts keyed by response word. Merging builders is
/// associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsBuilder {
    rows: Vec<BTreeMap<String, u64>>,
}

impl CountsBuilder {
    pub fn new(n_rows: usize) -> Self {
        CountsBuilder { rows: vec![BTreeMap::new(); n_rows] }
    }

    pub fn add(&mut self, cue_id: usize, response: &str, count: u64) -> Result<()> {
        let n = self.rows.len();
        let row = self.rows.get_mut(cue_id).ok_or(Error::IdOutOfRange { id: cue_id, size: n })?;
        if count > 0 {
            *row.entry(normalize_word(response)).or_default() += count;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &CountsBuilder) -> Result<()> {
        if other.rows.len() != self.rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot merge count builders with {} and {} rows",
                self.rows.len(),
                other.rows.len()
            )));
        }
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            for (w, c) in b {
                *a.entry(w.clone()).or_default() += c;
            }
        }
        Ok(())
    }

    /// Columns are the sorted union of all responses.
    pub fn finish(self) -> CueResponseMatrix {
        let mut index: BTreeMap<&str, u32> = BTreeMap::new();
        for row in &self.rows {
            for w in row.keys() {
                index.entry(w.as_str()).or_insert(0);
            }
        }
        for (i, v) in index.values_mut().enumerate() {
            *v = i as u32;
        }
        let rows = self.rows.iter().map(|row| row.iter().map(|(w, &c)| (index[w.as_str()], c)).collect()).collect();
        let columns = index.keys().map(|s| String::from(*s)).collect();
        CueResponseMatrix { columns, rows }
    }
}

/// Sparse nonnegative counts: rows are cues (vocabulary order), columns are
/// response types (sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueResponseMatrix {
    columns: Vec<String>,
    rows: Vec<Vec<(u32, u64)>>,
}

impl CueResponseMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Nonzero `(column, count)` entries of a row, ascending by column.
    pub fn row(&self, i: usize) -> &[(u32, u64)] {
        &self.rows[i]
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.rows[i].iter().map(|&(_, c)| c).sum()
    }

    pub fn total(&self) -> u64 {
        (0..self.n_rows()).map(|i| self.row_total(i)).sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, response: &str) -> u64 {
        match self.columns.binary_search_by(|c| c.as_str().cmp(response)) {
            Ok(col) => {
                self.rows[i].binary_search_by_key(&(col as u32), |&(c, _)| c).map(|k| self.rows[i][k].1).unwrap_or(0)
            }
            Err(_) => 0,
        }
    }

    /// Rebuilds from `(row, column, count)` triples over a column list.
    pub fn from_triplets(n_rows: usize, columns: Vec<String>, triplets: &[(usize, usize, u64)]) -> Result<Self> {
        let mut b = CountsBuilder::new(n_rows);
        for &(r, c, v) in triplets {
            let w = columns.get(c).ok_or(Error::IdOutOfRange { id: c, size: columns.len() })?;
            b.add(r, w, v)?;
        }
        let m = b.finish();
        Ok(m)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(c, v)| (i, c as usize, v)))
    }

    /// Counts as real weights.
    pub fn to_weighted(&self) -> WeightedMatrix {
        WeightedMatrix {
            n_cols: self.n_cols(),
            rows: self.rows.iter().map(|r| r.iter().map(|&(c, v)| (c, v as f64)).collect()).collect(),
        }
    }

    /// Joint and marginal probabilities `(P(i,j) by row, P(i), P(j))`.
    pub fn probabilities(&self) -> Result<Probabilities> {
        let n = self.total();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let n = n as f64;
        let joint: Vec<Vec<(u32, f64)>> =
            self.rows.iter().map(|r| r.iter().map(|&(c, v)| (c, v as f64 / n)).collect()).collect();
        let p_row = joint.iter().map(|r| r.iter().map(|&(_, p)| p).sum()).collect();
        let mut p_col = vec![0.0; self.n_cols()];
        for r in &joint {
            for &(c, p) in r {
                p_col[c as usize] += p;
            }
        }
        Ok((joint, p_row, p_col))
    }
}

/// Tallies compliant records of one paradigm. Records of the other paradigm
/// and non-compliant records are skipped; a cue missing from the vocabulary
/// is an error.
pub fn aggregate_counts<'a, I>(records: I, vocab: &Vocabulary, paradigm: Paradigm) -> Result<CueResponseMatrix>
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let mut b = CountsBuilder::new(vocab.len());
    for r in records {
        if r.paradigm != paradigm || !r.compliant {
            continue;
        }
        let cue = vocab.require_id(&r.cue)?;
        for w in &r.parsed_responses {
            b.add(cue, w, 1)?;
        }
    }
    Ok(b.finish())
}

/// Sparse real-valued matrix sharing the row/column space of a
/// [`CueResponseMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    n_cols: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl WeightedMatrix {
    pub fn new(n_cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        WeightedMatrix { n_cols, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows() * self.n_cols];
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                out[i * self.n_cols + c as usize] = v;
            }
        }
        out
    }

    /// Column-major postings `(row, value)`, rows ascending.
    fn postings(&self) -> Vec<Vec<(u32, f64)>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                cols[c as usize].push((i as u32, v));
            }
        }
        cols
    }

    /// Upper-triangle row dot products: entry `j - i` of result `i` is
    /// `row_i . row_j`.
    fn row_dots(&self) -> Vec<Vec<f64>> {
        let n = self.n_rows();
        let postings = self.postings();
        let postings = &postings;
        map_range(n, |i| {
            let mut acc = vec![0.0; n - i];
            for &(c, v) in &self.rows[i] {
                let col = &postings[c as usize];
                let start = col.partition_point(|&(r, _)| (r as usize) < i);
                for &(r, w) in &col[start..] {
                    acc[r as usize - i] += v * w;
                }
            }
            acc
        })
    }

    /// `B B^T` as a dense row-major `n x n` matrix.
    pub fn row_gram(&self) -> Vec<f64> {
        let n = self.n_rows();
        let mut g = vec![0.0; n * n];
        for (i, acc) in self.row_dots().into_iter().enumerate() {
            for (off, v) in acc.into_iter().enumerate() {
                let j = i + off;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }

    /// `B^T B` as a dense row-major `m x m` matrix.
    pub fn col_gram(&self) -> Vec<f64> {
        let m = self.n_cols;
        let mut g = vec![0.0; m * m];
        for r in &self.rows {
            for &(a, va) in r {
                for &(b, vb) in r {
                    g[a as usize * m + b as usize] += va * vb;
                }
            }
        }
        g
    }
}

/// Positive pointwise mutual information with natural log:
/// `max(0, ln(P(i,j) / (P(i) P(j))))` on nonzero cells only.
pub fn ppmi(counts: &CueResponseMatrix) -> Result<WeightedMatrix> {
    let (joint, p_row, p_col) = counts.probabilities()?;
    let rows = joint
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .filter_map(|&(c, p)| {
                    let pmi = libm::log(p / (p_row[i] * p_col[c as usize]));
                    (pmi > 0.0).then_some((c, pmi))
                })
                .collect()
        })
        .collect();
    Ok(WeightedMatrix { n_cols: counts.n_cols(), rows })
}

/// Cosine similarity between rows. Zero rows are masked.
pub fn cosine_rows(m: &WeightedMatrix, tag: SourceTag) -> SimilarityMatrix {
    let n = m.n_rows();
    let norms: Vec<f64> = m.rows.iter().map(|r| libm::sqrt(r.iter().map(|&(_, v)| v * v).sum::<f64>())).collect();
    let mask: Vec<bool> = norms.iter().map(|&x| !(x > 0.0)).collect();
    let dots = m.row_dots();
    let mut upper = Vec::with_capacity(SimilarityMatrix::packed_len(n));
    for (i, acc) in dots.into_iter().enumerate() {
        for (off, dot) in acc.into_iter().enumerate() {
            let j = i + off;
            upper.push(if mask[i] || mask[j] {
                0.0
            } else if i == j {
                1.0
            } else {
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            });
        }
    }
    SimilarityMatrix::from_packed(n, upper, mask, tag).expect("packed length is consistent")
}

/// Rank-`k` truncated SVD `B ~ U_k S_k V_k^T`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub n_rows: usize,
    pub n_cols: usize,
    pub k: usize,
    /// `n_rows x k`, row-major.
    pub u: Vec<f64>,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
    /// `n_cols x k`, row-major.
    pub v: Vec<f64>,
}

impl TruncatedSvd {
    /// Cue embeddings `Z = U_k S_k` (`n_rows x k`).
    pub fn embedding(&self) -> Vec<f64> {
        let mut z = self.u.clone();
        for row in z.chunks_mut(self.k) {
            for (x, s) in row.iter_mut().zip(&self.singular_values) {
                *x *= s;
            }
        }
        z
    }

    /// Dense `U_k S_k V_k^T`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let z = self.embedding();
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            let zi = &z[i * self.k..(i + 1) * self.k];
            for j in 0..self.n_cols {
                let vj = &self.v[j * self.k..(j + 1) * self.k];
                out[i * self.n_cols + j] = crate::linalg::dot(zi, vj);
            }
        }
        out
    }
}

/// Truncated SVD via the eigendecomposition of the smaller Gram matrix.
pub fn truncated_svd(m: &WeightedMatrix, k: usize) -> Result<TruncatedSvd> {
    let (n, c) = (m.n_rows(), m.n_cols());
    let max = n.min(c);
    if k < 1 || k > max {
        return Err(Error::RankOutOfRange { k, max });
    }
    let mut u = vec![0.0; n * k];
    let mut v = vec![0.0; c * k];
    let mut sigma = vec![0.0; k];
    if n <= c {
        let eig = symmetric_eigen(&m.row_gram(), n)?;
        for t in 0..k {
            sigma[t] = libm::sqrt(eig.values[t].max(0.0));
            for i in 0..n {
                u[i * k + t] = eig.vector(t)[i];
            }
        }
        // V = B^T U S^-1
        for (i, r) in m.rows.iter().enumerate() {
            for &(col, val) in r {
                for t in 0..k {
                    if sigma[t] > 0.0 {
                        v[col as usize * k + t] += val * u[i * k + t] / sigma[t];
                    }
                }
            }
        }
    } else {
        let eig = symmetric_eigen(&m.col_gram(), c)?;
        for t in 0..k {
            sigma[t] = libm::sqrt(eig.values[t].max(0.0));
            for j in 0..c {
                v[j * k + t] = eig.vector(t)[j];
            }
        }
        // U = B V S^-1
        for (i, r) in m.rows.iter().enumerate() {
            for &(col, val) in r {
                for t in 0..k {
                    if sigma[t] > 0.0 {
                        u[i * k + t] += val * v[col as usize * k + t] / sigma[t];
                    }
                }
            }
        }
    }
    Ok(TruncatedSvd { n_rows: n, n_cols: c, k, u, singular_values: sigma, v })
}

/// Low-rank cue embeddings and their cosine geometry.
#[derive(Debug, Clone)]
pub struct SvdEmbedding {
    pub svd: TruncatedSvd,
    pub embedding: Vec<f64>,
    pub similarity: SimilarityMatrix,
}

pub fn svd_embed(m: &WeightedMatrix, k: usize, tag: SourceTag) -> Result<SvdEmbedding> {
    let svd = truncated_svd(m, k)?;
    let embedding = svd.embedding();
    let similarity = cosine_dense(&embedding, m.n_rows(), k, tag);
    Ok(SvdEmbedding { svd, embedding, similarity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compliance::FailureReason;

    fn counts(rows: &[&[u64]]) -> CueResponseMatrix {
        let cols: Vec<String> = (0..rows[0].len()).map(|j| format!("r{j:03}")).collect();
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                t.push((i, j, v));
            }
        }
        CueResponseMatrix::from_triplets(rows.len(), cols, &t).unwrap()
    }

    fn record(cue: &str, responses: &[&str], compliant: bool) -> TrialRecord {
        TrialRecord {
            paradigm: Paradigm::ForcedChoice,
            cue_id: 0,
            cue: cue.into(),
            trial_index: 0,
            raw_output: String::new(),
            parsed_responses: responses.iter().map(|s| String::from(*s)).collect(),
            compliant,
            attempts: 1,
            failure_reason: (!compliant).then_some(FailureReason::Format),
        }
    }

    #[test]
    fn aggregation_counts_responses() {
        let v = Vocabulary::from_words(["dog", "cat", "leash", "bone"]).unwrap();
        let recs = [
            record("dog", &["cat", "leash"], true),
            record("dog", &["cat", "bone"], true),
            record("dog", &["leash", "bone"], false),
        ];
        let m = aggregate_counts(&recs, &v, Paradigm::ForcedChoice).unwrap();
        assert_eq!(m.get(0, "cat"), 2);
        assert_eq!(m.get(0, "leash"), 1);
        assert_eq!(m.get(0, "bone"), 1);
        assert_eq!(m.row_total(0), 4);
        assert_eq!(m.row_total(1), 0);
        assert_eq!(aggregate_counts(&recs, &v, Paradigm::FreeAssociation).unwrap().total(), 0);

        let bad = [record("cow", &["cat", "leash"], true)];
        assert!(matches!(aggregate_counts(&bad, &v, Paradigm::ForcedChoice), Err(Error::UnknownCue(_))));
    }

    #[test]
    fn builder_merge_is_order_free() {
        let mut a = CountsBuilder::new(2);
        a.add(0, "x", 2).unwrap();
        a.add(1, "y", 1).unwrap();
        let mut b = CountsBuilder::new(2);
        b.add(0, "z", 1).unwrap();
        b.add(0, "x", 1).unwrap();
        let mut ab = a.clone();
        ab.merge(&b).unwrap();
        let mut ba = b.clone();
        ba.merge(&a).unwrap();
        assert_eq!(ab.finish(), ba.finish());
    }

    #[test]
    fn ppmi_worked_example() {
        let w = ppmi(&counts(&[&[2, 0], &[1, 1]])).unwrap();
        let d = w.to_dense();
        assert!((d[0] - libm::log(4.0 / 3.0)).abs() < 1e-12);
        assert!((d[3] - libm::log(2.0)).abs() < 1e-12);
        // cell (1,0): ln(0.25 / (0.5 * 0.75)) < 0
        assert_eq!(d[2], 0.0);
        assert_eq!(d[1], 0.0);
        assert_eq!(w.nnz(), 2);
    }

    #[test]
    fn ppmi_uniform_is_zero() {
        let w = ppmi(&counts(&[&[3, 3, 3], &[3, 3, 3]])).unwrap();
        assert_eq!(w.nnz(), 0);
    }

    #[test]
    fn ppmi_empty_errors() {
        assert_eq!(ppmi(&counts(&[&[0, 0], &[0, 0]])).unwrap_err(), Error::EmptyMatrix);
    }

    #[test]
    fn cosine_rows_cases() {
        let m = counts(&[&[1, 1, 0], &[0, 1, 1], &[2, 2, 0], &[0, 0, 0], &[0, 0, 5]]).to_weighted();
        let s = cosine_rows(&m, SourceTag::FcCounts);
        assert!((s.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((s.get(0, 2) - 1.0).abs() < 1e-15);
        assert_eq!(s.get(0, 4), 0.0);
        assert_eq!(s.mask(), [false, false, false, true, false]);
        assert_eq!(s.get(3, 3), 0.0);
        assert_eq!(s.get(4, 4), 1.0);
    }

    #[test]
    fn svd_rank_one() {
        // outer product of [1,2,3] and [1,0,2,1]
        let m = counts(&[&[1, 0, 2, 1], &[2, 0, 4, 2], &[3, 0, 6, 3]]).to_weighted();
        let e = svd_embed(&m, 1, SourceTag::FcSvd(1)).unwrap();
        let rec = e.svd.reconstruct();
        for (a, b) in rec.iter().zip(m.to_dense()) {
            assert!((a - b).abs() < 1e-10);
        }
        for &x in e.similarity.packed() {
            assert!((x.abs() - 1.0).abs() < 1e-12 || x == 0.0);
        }
        assert!(matches!(truncated_svd(&m, 4), Err(Error::RankOutOfRange { k: 4, max: 3 })));
        assert!(truncated_svd(&m, 0).is_err());
    }
}
