//! Seed derivation and the pseudo-random stream used everywhere.
//!
//! One 64-bit master seed drives the whole pipeline. Every consumer derives
//! its own seed with [`mix64`], the SplitMix64 finalizer (a bijection on
//! `u64`), so seeds are stable across platforms and independent of call
//! order:
//!
//! ```text
//! cue_seed(master, cue) = mix64(master XOR (cue + 1) * 0x9E3779B97F4A7C15)
//! derive(parent, [t0, t1, ..]) = fold s <- mix64(s XOR (t + 1) * 0x9E3779B97F4A7C15)
//! ```
//!
//! Both maps are injective in the cue id for a fixed master seed and in the
//! master seed for a fixed cue id.
//!
//! Streams are Xoshiro256++ seeded through SplitMix64
//! ([`rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`]). Bounded integers use
//! Lemire's multiply-and-reject method and floats take the top 53 bits, so a
//! stream's outputs do not depend on any distribution code outside this file.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tags keep derived seeds for different purposes apart.
pub mod tag {
    pub const FC_SHUFFLE: u64 = 0x4643_5348; // "FCSH"
    pub const FC_RETRY: u64 = 0x4643_5254; // "FCRT"
    pub const FA_RUN: u64 = 0x4641_5255; // "FARU"
    pub const VOCAB_SPLIT: u64 = 0x5350_4C54; // "SPLT"
    pub const RSA_PAIRS: u64 = 0x5253_4150; // "RSAP"
    pub const TRAIN_PAIRS: u64 = 0x5452_4E50; // "TRNP"
    pub const CV_FOLDS: u64 = 0x4356_464F; // "CVFO"
    pub const SIMULATOR: u64 = 0x5349_4D55; // "SIMU"
    pub const FAULT: u64 = 0x4641_4C54; // "FALT"
    pub const SYNTHETIC: u64 = 0x5359_4E54; // "SYNT"
}

/// SplitMix64 output finalizer.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, value: u64) -> u64 {
    mix64(state ^ value.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// Per-cue seed. Deterministic and collision-free over cue ids.
pub fn cue_seed(master_seed: u64, cue_id: usize) -> u64 {
    absorb(master_seed, cue_id as u64)
}

/// Folds a sequence of tags into a parent seed.
pub fn derive(parent: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(parent, |s, &p| absorb(s, p))
}

/// Seed of the nucleus-sampled FC retry `attempt` (1-based attempt number).
pub fn fc_retry_seed(master_seed: u64, cue_id: usize, group_index: usize, attempt: u32) -> u64 {
    derive(cue_seed(master_seed, cue_id), &[tag::FC_RETRY, group_index as u64, attempt as u64])
}

/// Sampling seed of free-association run `run_index` for a cue.
pub fn fa_run_seed(master_seed: u64, cue_id: usize, run_index: usize) -> u64 {
    derive(cue_seed(master_seed, cue_id), &[tag::FA_RUN, run_index as u64])
}

/// 64-bit FNV-1a, used to key deterministic participants on prompt text.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Deterministic pseudo-random stream (Xoshiro256++).
#[derive(Debug, Clone)]
pub struct Stream(Xoshiro256PlusPlus);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn open_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (one variate per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.open_unit();
        let u2 = self.unit();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// Standard Gumbel variate.
    pub fn gumbel(&mut self) -> f64 {
        -libm::log(-libm::log(self.open_unit()))
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec::Vec;

    #[test]
    fn cue_seed_is_deterministic() {
        assert_eq!(cue_seed(123, 7), cue_seed(123, 7));
    }

    #[test]
    fn cue_seeds_distinct_over_vocabulary() {
        let mut s = Stream::new(99);
        for _ in 0..10 {
            let master = s.next_u64();
            let seeds: BTreeSet<u64> = (0..5000).map(|c| cue_seed(master, c)).collect();
            assert_eq!(seeds.len(), 5000);
        }
    }

    #[test]
    fn cue_seeds_distinct_over_masters() {
        let mut s = Stream::new(7);
        for _ in 0..1000 {
            let (a, b) = (s.next_u64(), s.next_u64());
            if a != b {
                assert_ne!(cue_seed(a, 7), cue_seed(b, 7));
            }
        }
    }

    #[test]
    fn below_stays_in_range_and_covers() {
        let mut s = Stream::new(1);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[s.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 850 && c < 1150), "{seen:?}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut s = Stream::new(3);
        let mut v: Vec<u32> = (0..100).collect();
        s.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }

    #[test]
    fn normal_moments() {
        let mut s = Stream::new(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }
}
