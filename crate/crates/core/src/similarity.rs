//! Symmetric word-by-word similarity matrices.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::hidden::Strategy;
use crate::par::map_range;
use crate::{Error, Result};

/// Where a similarity matrix came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceTag {
    FcPpmi,
    FaPpmi,
    FcCounts,
    FaCounts,
    FcSvd(usize),
    FaSvd(usize),
    Hidden {
        model: String,
        strategy: Strategy,
        layer: u32,
    },
    FastText,
    Bert,
    Consensus {
        target: String,
        strategy: Strategy,
    },
    /// Planted ground truth of a simulated participant.
    Planted,
    Other(String),
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTag::FcPpmi => f.write_str("FC_PPMI"),
            SourceTag::FaPpmi => f.write_str("FA_PPMI"),
            SourceTag::FcCounts => f.write_str("FC_counts"),
            SourceTag::FaCounts => f.write_str("FA_counts"),
            SourceTag::FcSvd(k) => write!(f, "FC_SVD_{k}"),
            SourceTag::FaSvd(k) => write!(f, "FA_SVD_{k}"),
            SourceTag::Hidden { model, strategy, layer } => {
                write!(f, "hidden:{model}:{}:{layer}", strategy.as_str())
            }
            SourceTag::FastText => f.write_str("FT"),
            SourceTag::Bert => f.write_str("BERT"),
            SourceTag::Consensus { target, strategy } => {
                write!(f, "consensus:{target}:{}", strategy.as_str())
            }
            SourceTag::Planted => f.write_str("planted"),
            SourceTag::Other(s) => f.write_str(s),
        }
    }
}

impl SourceTag {
    pub fn parse(s: &str) -> SourceTag {
        match s {
            "FC_PPMI" => return SourceTag::FcPpmi,
            "FA_PPMI" => return SourceTag::FaPpmi,
            "FC_counts" => return SourceTag::FcCounts,
            "FA_counts" => return SourceTag::FaCounts,
            "FT" => return SourceTag::FastText,
            "BERT" => return SourceTag::Bert,
            "planted" => return SourceTag::Planted,
            _ => {}
        }
        if let Some(k) = s.strip_prefix("FC_SVD_").and_then(|k| k.parse().ok()) {
            return SourceTag::FcSvd(k);
        }
        if let Some(k) = s.strip_prefix("FA_SVD_").and_then(|k| k.parse().ok()) {
            return SourceTag::FaSvd(k);
        }
        if let Some(rest) = s.strip_prefix("hidden:") {
            // model ids may contain ':'; strategy and layer are the last two fields
            let mut parts = rest.rsplitn(3, ':');
            if let (Some(layer), Some(strategy), Some(model)) = (parts.next(), parts.next(), parts.next()) {
                if let (Ok(layer), Some(strategy)) = (layer.parse(), Strategy::parse(strategy)) {
                    return SourceTag::Hidden { model: model.to_string(), strategy, layer };
                }
            }
        }
        if let Some(rest) = s.strip_prefix("consensus:") {
            if let Some((target, strategy)) = rest.rsplit_once(':') {
                if let Some(strategy) = Strategy::parse(strategy) {
                    return SourceTag::Consensus { target: target.to_string(), strategy };
                }
            }
        }
        SourceTag::Other(s.to_string())
    }
}

/// Dense symmetric matrix stored as its packed upper triangle (row-major,
/// diagonal included), with a mask of rows that had no defined similarity.
///
/// Masked rows are all zero, including their diagonal; unmasked rows of a
/// cosine matrix have a diagonal of exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    upper: Vec<f64>,
    mask: Vec<bool>,
    tag: SourceTag,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows before i hold n + (n-1) + ... + (n-i+1) entries
    i * (2 * n - i + 1) / 2 + (j - i)
}

impl SimilarityMatrix {
    pub fn packed_len(n: usize) -> usize {
        n * (n + 1) / 2
    }

    /// Wraps a packed upper triangle.
    pub fn from_packed(n: usize, upper: Vec<f64>, mask: Vec<bool>, tag: SourceTag) -> Result<Self> {
        if upper.len() != Self::packed_len(n) || mask.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "packed similarity for n={n} needs {} values and {n} mask bits, got {} and {}",
                Self::packed_len(n),
                upper.len(),
                mask.len()
            )));
        }
        Ok(SimilarityMatrix { n, upper, mask, tag })
    }

    /// Builds from packed data, deriving the mask from zero diagonal entries.
    pub fn from_packed_unit_diagonal(n: usize, upper: Vec<f64>, tag: SourceTag) -> Result<Self> {
        if upper.len() != Self::packed_len(n) {
            return Err(Error::DimensionMismatch(format!(
                "packed similarity for n={n} needs {} values, got {}",
                Self::packed_len(n),
                upper.len()
            )));
        }
        let mask = (0..n).map(|i| upper[packed_index(n, i, i)] == 0.0).collect();
        Ok(SimilarityMatrix { n, upper, mask, tag })
    }

    /// Evaluates `f(i, j)` for `i <= j`.
    pub fn from_fn(n: usize, tag: SourceTag, mask: Vec<bool>, f: impl Fn(usize, usize) -> f64) -> Self {
        assert_eq!(mask.len(), n);
        let mut upper = Vec::with_capacity(Self::packed_len(n));
        for i in 0..n {
            for j in i..n {
                upper.push(f(i, j));
            }
        }
        SimilarityMatrix { n, upper, mask, tag }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn tag(&self) -> &SourceTag {
        &self.tag
    }

    pub fn set_tag(&mut self, tag: SourceTag) {
        self.tag = tag;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(self.n, i, j)]
    }

    pub fn packed(&self) -> &[f64] {
        &self.upper
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Full row `i` (length n).
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                out[i * self.n + j] = v;
                out[j * self.n + i] = v;
            }
        }
        out
    }

    /// Rows and columns reordered so that new index `k` is old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mask = perm.iter().map(|&p| self.mask[p]).collect();
        SimilarityMatrix::from_fn(self.n, self.tag.clone(), mask, |i, j| self.get(perm[i], perm[j]))
    }
}

/// Cosine similarity between the rows of a dense `n x d` matrix.
///
/// Zero rows are masked: their entries (diagonal included) are 0. Unmasked
/// diagonal entries are exactly 1 and every entry is clamped to `[-1, 1]`.
pub fn cosine_dense(rows: &[f64], n: usize, d: usize, tag: SourceTag) -> SimilarityMatrix {
    assert_eq!(rows.len(), n * d);
    let mut unit = rows.to_vec();
    let mut mask = vec![false; n];
    for i in 0..n {
        let r = &mut unit[i * d..(i + 1) * d];
        let norm = crate::linalg::norm(r);
        if norm > 0.0 && norm.is_finite() {
            r.iter_mut().for_each(|x| *x /= norm);
        } else {
            mask[i] = true;
            r.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    let unit = &unit;
    let mask_ref = &mask;
    let rows_out = map_range(n, |i| {
        let ri = &unit[i * d..(i + 1) * d];
        (i..n)
            .map(|j| {
                if mask_ref[i] || mask_ref[j] {
                    0.0
                } else if i == j {
                    1.0
                } else {
                    crate::linalg::dot(ri, &unit[j * d..(j + 1) * d]).clamp(-1.0, 1.0)
                }
            })
            .collect::<Vec<f64>>()
    });
    let mut upper = Vec::with_capacity(SimilarityMatrix::packed_len(n));
    for r in rows_out {
        upper.extend(r);
    }
    SimilarityMatrix { n, upper, mask, tag }
}
