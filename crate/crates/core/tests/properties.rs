mod common;

use std::collections::BTreeSet;

use assocgeom_core::behavior::{cosine_rows, ppmi, CueResponseMatrix};
use assocgeom_core::config::{CenteringMode, RunConfig};
use assocgeom_core::eval::{nn_overlap_many, rsa, sample_pairs};
use assocgeom_core::harness::{max_fc_attempts, run_fc_trial, DecodeParams, Message, Participant};
use assocgeom_core::hidden::{center, consensus, hidden_similarity, CenteringStats, LayerEmbeddings, Strategy};
use assocgeom_core::ridge::{build_features, split_vocab, Predictors};
use assocgeom_core::seed::{derive, fc_retry_seed, Stream};
use assocgeom_core::similarity::{cosine_dense, SimilarityMatrix, SourceTag};
use assocgeom_core::trials::{fc_trials_for_cue, fc_trials_per_cue, FcTrial};
use assocgeom_core::vocab::Vocabulary;
use assocgeom_core::Result;
use common::*;
use proptest::prelude::*;

fn cfg_with(set_size: usize, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.paradigm.candidate_set_size = set_size;
    cfg.master_seed = seed;
    cfg
}

fn embeddings(model: &str, layer: u32, n: usize, d: usize, seed: u64) -> LayerEmbeddings {
    let mut s = Stream::new(seed);
    let v = (0..n * d).map(|_| s.normal() + 0.7).collect();
    LayerEmbeddings::new(model, Strategy::Averaged, layer, n, d, v).unwrap()
}

fn assert_partition(n: usize, cue: usize, trials: &[FcTrial], set_size: usize) {
    assert_eq!(trials.len(), fc_trials_per_cue(n, set_size));
    let mut seen = BTreeSet::new();
    for (g, t) in trials.iter().enumerate() {
        assert_eq!(t.group_index, g);
        assert!(!t.candidate_ids.contains(&cue));
        if g + 1 < trials.len() {
            assert_eq!(t.candidate_ids.len(), set_size);
        }
        for &c in &t.candidate_ids {
            assert!(seen.insert(c), "word {c} appears twice for cue {cue}");
        }
    }
    assert_eq!(seen.len(), n - 1);
}

#[test]
fn partition_exhaustive_at_200_words() {
    let cfg = cfg_with(16, 42);
    for cue in 0..200 {
        assert_partition(200, cue, &fc_trials_for_cue(200, cue, &cfg), 16);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidate_groups_partition_other_words(n in 2usize..150, set_size in 2usize..24, seed: u64, cue_frac in 0.0f64..1.0) {
        let cue = ((n as f64 * cue_frac) as usize).min(n - 1);
        let cfg = cfg_with(set_size, seed);
        let trials = fc_trials_for_cue(n, cue, &cfg);
        assert_partition(n, cue, &trials, set_size);
        prop_assert_eq!(trials, fc_trials_for_cue(n, cue, &cfg));
    }

    #[test]
    fn retry_seeds_differ_by_attempt(master: u64, cue in 0usize..10_000, group in 0usize..400) {
        let seeds: BTreeSet<u64> = (0..5).map(|a| fc_retry_seed(master, cue, group, a)).collect();
        prop_assert_eq!(seeds.len(), 5);
    }

    #[test]
    fn ppmi_keeps_sparsity_and_sign(seed: u64, rows in 2usize..30, cols in 2usize..40) {
        let m = random_counts(rows, cols, 0.2, seed);
        prop_assume!(m.total() > 0);
        let p = ppmi(&m).unwrap();
        for i in 0..rows {
            let nz: BTreeSet<u32> = m.row(i).iter().map(|e| e.0).collect();
            for &(c, v) in p.row(i) {
                prop_assert!(nz.contains(&c));
                prop_assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn count_cosine_ignores_global_scaling(seed: u64, c in 2u64..50) {
        let m = random_counts(15, 25, 0.3, seed);
        let scaled_trip: Vec<(usize, usize, u64)> = m.triplets().map(|(i, j, v)| (i, j, v * c)).collect();
        let scaled = CueResponseMatrix::from_triplets(15, m.columns().to_vec(), &scaled_trip).unwrap();
        let a = cosine_rows(&m.to_weighted(), SourceTag::FcCounts);
        let b = cosine_rows(&scaled.to_weighted(), SourceTag::FcCounts);
        for (x, y) in a.packed().iter().zip(b.packed()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_is_bounded_and_symmetric(seed: u64, n in 2usize..25, d in 1usize..8) {
        let rows = gaussian_rows(n, d, seed).concat();
        let s = cosine_dense(&rows, n, d, SourceTag::Planted);
        for i in 0..n {
            for j in 0..n {
                let v = s.get(i, j);
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&v));
                prop_assert_eq!(v.to_bits(), s.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn full_centering_is_idempotent_and_zero_mean(seed: u64, n in 2usize..40, d in 1usize..10) {
        let e = embeddings("m", 1, n, d, seed);
        let once = center(&e, &CenteringStats::fit_full(&e)).unwrap();
        let twice = center(&once, &CenteringStats::fit_full(&once)).unwrap();
        for (a, b) in once.vectors().iter().zip(twice.vectors()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        for c in 0..d {
            let m: f64 = (0..n).map(|i| once.vector(i)[c]).sum::<f64>() / n as f64;
            prop_assert!(m.abs() < 1e-6);
        }
    }

    #[test]
    fn similarity_ignores_positive_rescaling(seed: u64, n in 2usize..20) {
        let e = embeddings("m", 1, n, 6, seed);
        let mut s = Stream::new(seed ^ 1);
        let scales: Vec<f64> = (0..n).map(|_| 0.1 + 10.0 * s.unit()).collect();
        let v: Vec<f64> = e.vectors().chunks(6).zip(&scales).flat_map(|(r, k)| r.iter().map(move |x| x * k)).collect();
        let scaled = LayerEmbeddings::new("m", Strategy::Averaged, 1, n, 6, v).unwrap();
        let a = hidden_similarity(&e);
        let b = hidden_similarity(&scaled);
        for (x, y) in a.packed().iter().zip(b.packed()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn consensus_is_permutation_equivariant(seed: u64, n in 3usize..15) {
        let others: Vec<LayerEmbeddings> = (0..4).map(|k| embeddings(&format!("o{}", k % 2), 1 + k as u32 / 2, n, 4, seed + k)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        Stream::new(seed).shuffle(&mut perm);
        let permuted: Vec<LayerEmbeddings> = others
            .iter()
            .map(|e| {
                let v = perm.iter().flat_map(|&p| e.vector(p).to_vec()).collect();
                LayerEmbeddings::new(e.model_id.clone(), e.strategy, e.layer, n, 4, v).unwrap()
            })
            .collect();
        let a = consensus(&others, "t", CenteringMode::Centered, None).unwrap();
        let b = consensus(&permuted, "t", CenteringMode::Centered, None).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((a.get(perm[i], perm[j]) - b.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_comparison_is_perfect(seed: u64, n in 4usize..20) {
        let s = hidden_similarity(&embeddings("m", 1, n, 3, seed));
        let pairs = sample_pairs(n, 1000, seed, s.mask()).unwrap();
        prop_assert!((rsa(&s, &s, &pairs).unwrap().r - 1.0).abs() < 1e-12);
        let ks: Vec<usize> = (1..n - 1).collect();
        for r in nn_overlap_many(&s, &s, &ks).unwrap() {
            prop_assert_eq!(r.mean_overlap, 1.0);
        }
    }

    #[test]
    fn pair_samples_are_distinct_and_unmasked(seed: u64, n in 2usize..80, want in 1usize..500, mask_frac in 0.0f64..0.5) {
        let mut s = Stream::new(seed);
        let mask: Vec<bool> = (0..n).map(|_| s.unit() < mask_frac).collect();
        let p = sample_pairs(n, want, seed, &mask).unwrap();
        let set: BTreeSet<(u32, u32)> = p.pairs.iter().copied().collect();
        prop_assert_eq!(set.len(), p.len());
        prop_assert_eq!(p.len() as u64, (want as u64).min(p.available));
        for &(i, j) in &p.pairs {
            prop_assert!(i < j && !mask[i as usize] && !mask[j as usize]);
        }
    }

    #[test]
    fn vocab_split_is_disjoint_and_exhaustive(n in 10usize..3000, frac in 0.2f64..0.9, seed: u64) {
        let s = split_vocab(n, frac, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!((s.train.len() as f64 - frac * n as f64).abs() <= 1.0);
    }

    #[test]
    fn fc_attempts_are_bounded(answers in proptest::collection::vec("[a-z ,:.]{0,20}", 1..10)) {
        struct Replay(Vec<String>, std::cell::Cell<usize>);
        impl Participant for Replay {
            fn complete(&self, _: &[Message], _: &DecodeParams) -> Result<String> {
                let i = self.1.get();
                self.1.set(i + 1);
                Ok(self.0[i % self.0.len()].clone())
            }
        }
        let v = Vocabulary::from_words(["dog", "cat", "leash", "banana", "ivy"]).unwrap();
        let cfg = RunConfig::default();
        let trial = FcTrial { cue_id: 0, group_index: 0, candidate_ids: vec![1, 2, 3, 4], seed: 0 };
        let p = Replay(answers, std::cell::Cell::new(0));
        let r = run_fc_trial(&p, &trial, &v, &cfg).unwrap();
        prop_assert!(r.attempts >= 1 && r.attempts <= max_fc_attempts(&cfg));
        prop_assert_eq!(max_fc_attempts(&cfg), 7);
        prop_assert_eq!(r.compliant, r.failure_reason.is_none());
        prop_assert_eq!(p.1.get() as u32, r.attempts);
    }
}

fn with_test_words_perturbed(m: &SimilarityMatrix, test: &[usize], seed: u64) -> SimilarityMatrix {
    let mut s = Stream::new(seed);
    let is_test: Vec<bool> = (0..m.len()).map(|i| test.contains(&i)).collect();
    let mut noise = vec![0.0; m.packed().len()];
    noise.iter_mut().for_each(|x| *x = s.normal());
    let mut k = 0;
    let mut packed = m.packed().to_vec();
    for i in 0..m.len() {
        for j in i..m.len() {
            if is_test[i] || is_test[j] {
                packed[k] += noise[k];
            }
            k += 1;
        }
    }
    SimilarityMatrix::from_packed(m.len(), packed, m.mask().to_vec(), m.tag().clone()).unwrap()
}

#[test]
fn train_side_ignores_test_words() {
    let n = 60;
    let split = split_vocab(n, 0.8, 5).unwrap();
    let sims: Vec<SimilarityMatrix> = (0..5).map(|k| hidden_similarity(&embeddings("ref", 1, n, 4, 100 + k))).collect();
    let target = embeddings("t", 3, n, 8, 7);
    let preds = Predictors {
        fasttext: &sims[0],
        bert: &sims[1],
        consensus: &sims[2],
        fc_counts: &sims[3],
        fa_counts: &sims[4],
    };
    let (pairs, design) = build_features(&split, &preds, &target, 500, derive(1, &[2])).unwrap();

    let perturbed: Vec<SimilarityMatrix> =
        sims.iter().enumerate().map(|(k, m)| with_test_words_perturbed(m, &split.test, k as u64)).collect();
    let mut v = target.vectors().to_vec();
    for &t in &split.test {
        v[t * 8..(t + 1) * 8].iter_mut().for_each(|x| *x = *x * -3.0 + 11.0);
    }
    let target2 = LayerEmbeddings::new("t", Strategy::Averaged, 3, n, 8, v).unwrap();
    let preds2 = Predictors {
        fasttext: &perturbed[0],
        bert: &perturbed[1],
        consensus: &perturbed[2],
        fc_counts: &perturbed[3],
        fa_counts: &perturbed[4],
    };
    let (pairs2, design2) = build_features(&split, &preds2, &target2, 500, derive(1, &[2])).unwrap();

    assert_eq!(pairs.train, pairs2.train);
    assert_eq!(design.centering, design2.centering);
    assert_eq!(design.x_train, design2.x_train);
    assert_eq!(design.y_train, design2.y_train);
    assert_ne!(design.y_test, design2.y_test);
}
