//! Held-out-words ridge regression: hidden-state similarity of a word pair
//! predicted from reference and behavioral similarities, fit on pairs of
//! training words and scored on pairs of test words.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::RidgeConfig;
use crate::eval::{min_max_mean, sample_pairs};
use crate::hidden::{center, CenteringStats, LayerEmbeddings};
use crate::linalg::solve_spd;
use crate::par::map_range;
use crate::seed::{derive, tag, Stream};
use crate::similarity::SimilarityMatrix;
use crate::{Error, Result};

/// Column order of every feature row.
pub const FEATURES: [&str; 5] = ["FT", "BERT", "X", "FC", "FA"];
pub const N_FEATURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSplit {
    /// Sorted.
    pub train: Vec<usize>,
    /// Sorted.
    pub test: Vec<usize>,
    pub seed: u64,
}

impl VocabSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `true` at the ids of test words.
    pub fn test_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        self.test.iter().for_each(|&i| m[i] = true);
        m
    }
}

/// Shuffles the ids with `seed` and takes the first `round(fraction * n)`
/// as training words.
pub fn split_vocab(n: usize, fraction: f64, seed: u64) -> Result<VocabSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("train fraction must lie in (0, 1), got {fraction}")));
    }
    let n_train = libm::round(fraction * n as f64) as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::InsufficientData(format!(
            "a {n}-word vocabulary split at {fraction} leaves fewer than two words on one side"
        )));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    Stream::new(seed).shuffle(&mut ids);
    let mut train = ids[..n_train].to_vec();
    let mut test = ids[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(VocabSplit { train, test, seed })
}

/// Errors unless both words of every pair lie on the same side of the split.
pub fn check_within_split(test_mask: &[bool], pairs: &[(u32, u32)]) -> Result<()> {
    for &(i, j) in pairs {
        if test_mask[i as usize] != test_mask[j as usize] {
            return Err(Error::Leakage(format!("pair ({i}, {j}) crosses the train/test split")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub train: Vec<(u32, u32)>,
    pub test: Vec<(u32, u32)>,
    pub train_seed: u64,
}

/// Train pairs: `n_train_pairs` sampled among training words. Test pairs:
/// every pair of test words. Words set in `excluded` appear in neither.
pub fn form_pairs(split: &VocabSplit, excluded: &[bool], n_train_pairs: usize, seed: u64) -> Result<PairSet> {
    let n = split.len();
    if excluded.len() != n {
        return Err(Error::DimensionMismatch(format!("exclusion mask has {} entries for {n} words", excluded.len())));
    }
    let test_mask = split.test_mask();
    let train_side: Vec<bool> = (0..n).map(|i| test_mask[i] || excluded[i]).collect();
    let test_side: Vec<bool> = (0..n).map(|i| !test_mask[i] || excluded[i]).collect();
    let train = sample_pairs(n, n_train_pairs, seed, &train_side)?;
    let test = sample_pairs(n, usize::MAX, 0, &test_side)?;
    check_within_split(&test_mask, &train.pairs)?;
    check_within_split(&test_mask, &test.pairs)?;
    Ok(PairSet { train: train.pairs, test: test.pairs, train_seed: seed })
}

/// The five predictor matrices in feature order.
#[derive(Debug, Clone, Copy)]
pub struct Predictors<'a> {
    pub fasttext: &'a SimilarityMatrix,
    pub bert: &'a SimilarityMatrix,
    pub consensus: &'a SimilarityMatrix,
    pub fc_counts: &'a SimilarityMatrix,
    pub fa_counts: &'a SimilarityMatrix,
}

impl<'a> Predictors<'a> {
    pub fn as_array(&self) -> [&'a SimilarityMatrix; N_FEATURES] {
        [self.fasttext, self.bert, self.consensus, self.fc_counts, self.fa_counts]
    }

    /// Words masked in any predictor.
    pub fn mask(&self) -> Vec<bool> {
        crate::eval::union_mask(self.fasttext.len(), self.as_array())
    }

    pub fn check(&self, n: usize) -> Result<()> {
        for (name, m) in FEATURES.iter().zip(self.as_array()) {
            if m.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} predictor covers {} words, expected {n}",
                    m.len()
                )));
            }
        }
        Ok(())
    }
}

/// Row-major `pairs.len() x 5` predictor values.
pub fn predictor_rows(pairs: &[(u32, u32)], predictors: &Predictors<'_>) -> Vec<f64> {
    let mats = predictors.as_array();
    let mut x = Vec::with_capacity(pairs.len() * N_FEATURES);
    for &(i, j) in pairs {
        for m in mats {
            x.push(m.get(i as usize, j as usize));
        }
    }
    x
}

/// Cosine of the (already centered) vectors of each pair; 0 when either
/// vector is zero.
pub fn target_values(pairs: &[(u32, u32)], e: &LayerEmbeddings) -> Vec<f64> {
    let norms: Vec<f64> = (0..e.n_words()).map(|i| crate::linalg::norm(e.vector(i))).collect();
    pairs
        .iter()
        .map(|&(i, j)| {
            let (i, j) = (i as usize, j as usize);
            if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                (crate::linalg::dot(e.vector(i), e.vector(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            }
        })
        .collect()
}

/// Feature rows and targets for one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub x_train: Vec<f64>,
    pub y_train: Vec<f64>,
    pub x_test: Vec<f64>,
    pub y_test: Vec<f64>,
    /// Fit on training words only.
    pub centering: CenteringStats,
}

impl Design {
    pub fn n_train(&self) -> usize {
        self.y_train.len()
    }

    pub fn n_test(&self) -> usize {
        self.y_test.len()
    }
}

/// Targets for a layer given precomputed predictor rows: the layer is
/// centered with a mean over training words only.
pub fn layer_design(
    split: &VocabSplit,
    pairs: &PairSet,
    x_train: Vec<f64>,
    x_test: Vec<f64>,
    target: &LayerEmbeddings,
) -> Result<Design> {
    if target.n_words() != split.len() {
        return Err(Error::DimensionMismatch(format!(
            "target layer covers {} words, split covers {}",
            target.n_words(),
            split.len()
        )));
    }
    let centering = CenteringStats::fit_train(target, &split.train)?;
    let centered = center(target, &centering)?;
    Ok(Design {
        y_train: target_values(&pairs.train, &centered),
        y_test: target_values(&pairs.test, &centered),
        x_train,
        x_test,
        centering,
    })
}

/// Splits into pairs, reads predictor rows and centers the target layer.
pub fn build_features(
    split: &VocabSplit,
    predictors: &Predictors<'_>,
    target: &LayerEmbeddings,
    n_train_pairs: usize,
    seed: u64,
) -> Result<(PairSet, Design)> {
    predictors.check(split.len())?;
    let pairs = form_pairs(split, &predictors.mask(), n_train_pairs, seed)?;
    let x_train = predictor_rows(&pairs.train, predictors);
    let x_test = predictor_rows(&pairs.test, predictors);
    let design = layer_design(split, &pairs, x_train, x_test, target)?;
    Ok((pairs, design))
}

/// Column means and scales; a constant column gets scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fits on the rows of `x` (row-major, `p` columns) listed in `rows`.
    pub fn fit(x: &[f64], p: usize, rows: &[usize]) -> Standardizer {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; p];
        for &r in rows {
            for (m, v) in mean.iter_mut().zip(&x[r * p..(r + 1) * p]) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for &r in rows {
            for c in 0..p {
                let d = x[r * p + c] - mean[c];
                var[c] += d * d;
            }
        }
        let scale = var
            .iter()
            .enumerate()
            .map(|(c, v)| {
                let s = libm::sqrt(v / n);
                if s > 0.0 {
                    s
                } else {
                    log::warn!("predictor column {c} is constant on the fitting rows; scale set to 1");
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    #[inline]
    fn z(&self, c: usize, v: f64) -> f64 {
        (v - self.mean[c]) / self.scale[c]
    }
}

/// Standardized Gram matrix `ZᵀZ`, `Zᵀ(y - ȳ)` and `ȳ` over `rows`.
struct Moments {
    gram: Vec<f64>,
    zty: Vec<f64>,
    y_mean: f64,
}

fn moments(x: &[f64], y: &[f64], p: usize, rows: &[usize], st: &Standardizer) -> Moments {
    let y_mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
    let mut gram = vec![0.0; p * p];
    let mut zty = vec![0.0; p];
    let mut z = vec![0.0; p];
    for &r in rows {
        for c in 0..p {
            z[c] = st.z(c, x[r * p + c]);
        }
        let yc = y[r] - y_mean;
        for a in 0..p {
            zty[a] += z[a] * yc;
            for b in 0..=a {
                gram[a * p + b] += z[a] * z[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[b * p + a] = gram[a * p + b];
        }
    }
    Moments { gram, zty, y_mean }
}

fn solve_at(m: &Moments, p: usize, alpha: f64) -> Result<Vec<f64>> {
    let mut a = m.gram.clone();
    for k in 0..p {
        a[k * p + k] += alpha;
    }
    solve_spd(&a, p, &m.zty)
}

/// A fitted model on a feature subset. `beta` applies to standardized
/// columns; the intercept is the training mean of `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeFit {
    pub features: Vec<usize>,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
    /// `(alpha, mean CV MSE)` for every grid value.
    pub cv_mse: Vec<(f64, f64)>,
}

impl RidgeFit {
    /// Prediction for a full five-column feature row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self.features.iter().enumerate().map(|(c, &f)| self.beta[c] * self.standardizer.z(c, row[f])).sum::<f64>()
    }

    /// Coefficients on the original predictor scale.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.beta.iter().zip(&self.standardizer.scale).map(|(b, s)| b / s).collect()
    }
}

fn select_columns(x: &[f64], features: &[usize]) -> Vec<f64> {
    let n = x.len() / N_FEATURES;
    let mut out = Vec::with_capacity(n * features.len());
    for r in 0..n {
        for &f in features {
            out.push(x[r * N_FEATURES + f]);
        }
    }
    out
}

/// Ridge on standardized columns at a fixed `alpha`, fit on `x` (row-major,
/// `p` columns) and `y`.
pub fn fit_fixed(x: &[f64], y: &[f64], p: usize, alpha: f64) -> Result<(Vec<f64>, f64, Standardizer)> {
    let rows: Vec<usize> = (0..y.len()).collect();
    let st = Standardizer::fit(x, p, &rows);
    let m = moments(x, y, p, &rows, &st);
    Ok((solve_at(&m, p, alpha)?, m.y_mean, st))
}

/// Row indices of each CV fold: contiguous blocks of a seeded permutation.
pub fn cv_folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    Stream::new(seed).shuffle(&mut perm);
    (0..k).map(|f| perm[f * n / k..(f + 1) * n / k].to_vec()).collect()
}

/// Selects `alpha` from `grid` by `folds`-fold CV (mean squared error, the
/// first minimum wins) and refits on all rows of the subset.
pub fn fit_ridge(
    x: &[f64],
    y: &[f64],
    features: &[usize],
    grid: &[f64],
    folds: usize,
    standardize_per_fold: bool,
    seed: u64,
) -> Result<RidgeFit> {
    let n = y.len();
    if x.len() != n * N_FEATURES {
        return Err(Error::DimensionMismatch(format!("{} predictor values for {n} rows", x.len())));
    }
    if grid.is_empty() {
        return Err(Error::Config("empty alpha grid".into()));
    }
    if folds < 2 || n < folds * 2 {
        return Err(Error::InsufficientData(format!("{n} training rows for {folds}-fold CV")));
    }
    let p = features.len();
    let xs = select_columns(x, features);
    let fold_rows = cv_folds(n, folds, derive(seed, &[tag::CV_FOLDS]));
    let all_rows: Vec<usize> = (0..n).collect();
    let global = Standardizer::fit(&xs, p, &all_rows);

    let per_fold: Vec<Result<Vec<f64>>> = map_range(folds, |f| {
        let held = &fold_rows[f];
        let fit_rows: Vec<usize> =
            fold_rows.iter().enumerate().filter(|&(g, _)| g != f).flat_map(|(_, r)| r.iter().copied()).collect();
        let st = if standardize_per_fold { Standardizer::fit(&xs, p, &fit_rows) } else { global.clone() };
        let m = moments(&xs, y, p, &fit_rows, &st);
        grid.iter()
            .map(|&alpha| {
                let beta = solve_at(&m, p, alpha)?;
                let sse: f64 = held
                    .iter()
                    .map(|&r| {
                        let pred = m.y_mean + (0..p).map(|c| beta[c] * st.z(c, xs[r * p + c])).sum::<f64>();
                        (y[r] - pred) * (y[r] - pred)
                    })
                    .sum();
                Ok(sse / held.len() as f64)
            })
            .collect()
    });
    let mut mse = vec![0.0; grid.len()];
    for fold in per_fold {
        for (m, v) in mse.iter_mut().zip(fold?) {
            *m += v / folds as f64;
        }
    }
    let best = (0..grid.len()).fold(0, |b, i| if mse[i] < mse[b] { i } else { b });
    let m = moments(&xs, y, p, &all_rows, &global);
    let beta = solve_at(&m, p, grid[best])?;
    Ok(RidgeFit {
        features: features.to_vec(),
        alpha: grid[best],
        beta,
        intercept: m.y_mean,
        standardizer: global,
        cv_mse: grid.iter().copied().zip(mse).collect(),
    })
}

/// `1 - SS_res / SS_tot`; a constant target is an error.
pub fn r_squared(y: &[f64], pred: &[f64]) -> Result<f64> {
    let n = y.len();
    if n == 0 {
        return Err(Error::DegenerateTest);
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if !(ss_tot > 0.0) || y.iter().all(|&v| v == y[0]) {
        return Err(Error::DegenerateTest);
    }
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// R² of a fit on five-column rows `x`.
pub fn evaluate(fit: &RidgeFit, x: &[f64], y: &[f64]) -> Result<f64> {
    let pred: Vec<f64> = x.chunks_exact(N_FEATURES).map(|row| fit.predict(row)).collect();
    r_squared(y, &pred)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subset {
    Baseline,
    WithFc,
    WithFa,
    Full,
}

impl Subset {
    pub const ALL: [Subset; 4] = [Subset::Baseline, Subset::WithFc, Subset::WithFa, Subset::Full];

    pub fn features(self) -> &'static [usize] {
        match self {
            Subset::Baseline => &[0, 1, 2],
            Subset::WithFc => &[0, 1, 2, 3],
            Subset::WithFa => &[0, 1, 2, 4],
            Subset::Full => &[0, 1, 2, 3, 4],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Baseline => "baseline",
            Subset::WithFc => "baseline+FC",
            Subset::WithFa => "baseline+FA",
            Subset::Full => "baseline+FC+FA",
        }
    }

    pub fn parse(s: &str) -> Option<Subset> {
        Subset::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub subset: Subset,
    pub fit: RidgeFit,
    pub r2_train: f64,
    pub r2_test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRegression {
    pub layer: u32,
    /// In `Subset::ALL` order.
    pub subsets: Vec<SubsetResult>,
}

impl LayerRegression {
    pub fn r2(&self, s: Subset) -> f64 {
        self.subsets.iter().find(|r| r.subset == s).map_or(f64::NAN, |r| r.r2_test)
    }

    /// Test R² gain of a subset over the baseline.
    pub fn delta(&self, s: Subset) -> f64 {
        self.r2(s) - self.r2(Subset::Baseline)
    }
}

/// Fits every subset with its own CV and scores it on the test rows.
pub fn regress_layer(layer: u32, design: &Design, cfg: &RidgeConfig, seed: u64) -> Result<LayerRegression> {
    let grid = cfg.alpha_grid();
    let subsets = Subset::ALL
        .iter()
        .map(|&s| {
            let fit = fit_ridge(
                &design.x_train,
                &design.y_train,
                s.features(),
                &grid,
                cfg.cv_folds,
                cfg.standardize_per_fold,
                seed,
            )?;
            Ok(SubsetResult {
                subset: s,
                r2_train: evaluate(&fit, &design.x_train, &design.y_train)?,
                r2_test: evaluate(&fit, &design.x_test, &design.y_test)?,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerRegression { layer, subsets })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    R2Full,
    R2Baseline,
    DeltaFc,
    DeltaFa,
    DeltaFcFa,
}

impl Quantity {
    pub const ALL: [Quantity; 5] =
        [Quantity::R2Full, Quantity::R2Baseline, Quantity::DeltaFc, Quantity::DeltaFa, Quantity::DeltaFcFa];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::R2Full => "r2_full",
            Quantity::R2Baseline => "r2_baseline",
            Quantity::DeltaFc => "delta_r2_fc",
            Quantity::DeltaFa => "delta_r2_fa",
            Quantity::DeltaFcFa => "delta_r2_fc_fa",
        }
    }

    pub fn of(self, l: &LayerRegression) -> f64 {
        match self {
            Quantity::R2Full => l.r2(Subset::Full),
            Quantity::R2Baseline => l.r2(Subset::Baseline),
            Quantity::DeltaFc => l.delta(Subset::WithFc),
            Quantity::DeltaFa => l.delta(Subset::WithFa),
            Quantity::DeltaFcFa => l.delta(Subset::Full),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub quantity: Quantity,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeReport {
    pub model: String,
    pub layers: Vec<LayerRegression>,
    pub summary: Vec<QuantitySummary>,
}

impl RidgeReport {
    pub fn new(model: impl Into<String>, mut layers: Vec<LayerRegression>) -> RidgeReport {
        layers.sort_by_key(|l| l.layer);
        let summary = Quantity::ALL
            .iter()
            .map(|&q| {
                let v: Vec<f64> = layers.iter().map(|l| q.of(l)).collect();
                let (min, max, mean) = min_max_mean(&v);
                QuantitySummary { quantity: q, min, max, mean }
            })
            .collect();
        RidgeReport { model: model.into(), layers, summary }
    }
}

/// Runs every layer independently (in parallel when enabled). Each layer
/// receives the same pairs and CV seed.
pub fn regress_layers(
    split: &VocabSplit,
    pairs: &PairSet,
    predictors: &Predictors<'_>,
    layers: &[LayerEmbeddings],
    cfg: &RidgeConfig,
    seed: u64,
) -> Result<Vec<LayerRegression>> {
    predictors.check(split.len())?;
    let x_train = predictor_rows(&pairs.train, predictors);
    let x_test = predictor_rows(&pairs.test, predictors);
    map_range(layers.len(), |i| {
        let design = layer_design(split, pairs, x_train.clone(), x_test.clone(), &layers[i])?;
        regress_layer(layers[i].layer, &design, cfg, seed)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_rows(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut s = Stream::new(seed);
        let x: Vec<f64> = (0..n * N_FEATURES).map(|_| s.normal()).collect();
        let y = x.chunks(N_FEATURES).map(|r| 0.3 + 2.0 * r[0] - r[1] + 0.5 * r[3] + 0.1 * s.normal()).collect();
        (x, y)
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = split_vocab(5000, 0.8, 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (4000, 1000));
        assert_eq!(s, split_vocab(5000, 0.8, 7).unwrap());
        let s = split_vocab(10, 0.8, 1).unwrap();
        let pairs = form_pairs(&s, &[false; 10], 1000, 3).unwrap();
        assert_eq!(pairs.test.len(), 1);
        assert_eq!(pairs.train.len(), 28);
    }

    #[test]
    fn cross_split_pair_is_leakage() {
        let s = split_vocab(10, 0.8, 1).unwrap();
        let mask = s.test_mask();
        let bad = (s.train[0] as u32, s.test[0] as u32);
        assert!(matches!(check_within_split(&mask, &[bad]), Err(Error::Leakage(_))));
    }

    #[test]
    fn realizable_target_fits() {
        let mut s = Stream::new(1);
        let x: Vec<f64> = (0..300 * N_FEATURES).map(|_| s.normal()).collect();
        let y: Vec<f64> = x.chunks(N_FEATURES).map(|r| 1.0 + r[0] - 3.0 * r[4]).collect();
        let grid = RidgeConfig::default().alpha_grid();
        let fit = fit_ridge(&x, &y, &[0, 1, 2, 3, 4], &grid, 5, true, 0).unwrap();
        assert_eq!(fit.alpha, 1e-2);
        assert!(evaluate(&fit, &x, &y).unwrap() >= 0.999);
    }

    #[test]
    fn shrinkage_is_monotone() {
        let (x, y) = random_rows(200, 2);
        let grid = RidgeConfig::default().alpha_grid();
        let norms: Vec<f64> = grid
            .iter()
            .map(|&a| {
                let (b, _, _) = fit_fixed(&x, &y, 5, a).unwrap();
                crate::linalg::norm(&b)
            })
            .collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn constant_column_gets_unit_scale_and_zero_weight() {
        let (mut x, y) = random_rows(100, 3);
        x.chunks_mut(N_FEATURES).for_each(|r| r[2] = 4.0);
        let fit = fit_ridge(&x, &y, &[0, 1, 2], &[1e-2, 1.0], 5, true, 0).unwrap();
        assert_eq!(fit.standardizer.scale[2], 1.0);
        assert_eq!(fit.beta[2], 0.0);
    }

    #[test]
    fn constant_test_target_is_degenerate() {
        assert_eq!(r_squared(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]), Err(Error::DegenerateTest));
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Ok(1.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = random_rows(150, 4);
        let grid = RidgeConfig::default().alpha_grid();
        let a = fit_ridge(&x, &y, &[0, 1, 2, 3, 4], &grid, 5, true, 11).unwrap();
        let b = fit_ridge(&x, &y, &[0, 1, 2, 3, 4], &grid, 5, true, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn folds_partition_rows() {
        let f = cv_folds(23, 5, 9);
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(f.iter().all(|b| b.len() == 4 || b.len() == 5));
    }
}
