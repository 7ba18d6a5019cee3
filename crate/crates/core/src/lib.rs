//! Measuring a language model's behavioral semantic geometry and comparing it
//! with its layerwise hidden-state geometry.
//!
//! The crate is `no_std` (with `alloc`) and contains every numerical and
//! protocol-level piece of the toolkit:
//!
//! - [`vocab`] and [`config`]: the shared word index and run configuration.
//! - [`seed`]: the documented seed-derivation and PRNG policy.
//! - [`trials`]: forced-choice candidate partitions, free-association run
//!   schedules and the verbatim prompt texts.
//! - [`compliance`] and [`harness`]: response parsing and the
//!   repair/retry state machine driven against a [`harness::Participant`].
//! - [`simulator`]: a planted-geometry participant used as ground truth.
//! - [`behavior`]: cue-response counts, PPMI weighting, row cosine and
//!   truncated SVD embeddings.
//! - [`hidden`]: layer embeddings, mean-centering and cross-model consensus.
//! - [`eval`]: sampled RSA and nearest-neighbor overlap.
//! - [`ridge`]: the held-out-words ridge regression protocol.
//!
//! File formats, the HTTP participant and the command line live in the
//! companion `assocgeom` crate.
//!
//! Enable the `parallel` feature to spread row-block kernels over a rayon
//! pool. Results are identical with and without it.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod behavior;
pub mod compliance;
pub mod config;
mod error;
pub mod eval;
pub mod harness;
pub mod hidden;
pub mod linalg;
mod par;
pub mod ridge;
pub mod seed;
pub mod similarity;
pub mod simulator;
pub mod synthetic;
pub mod trials;
pub mod vocab;

pub use error::{Error, ErrorClass, Result};
pub use similarity::{SimilarityMatrix, SourceTag};
pub use vocab::Vocabulary;
