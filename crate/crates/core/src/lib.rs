//! Knowledge-sharing zero-shot learning pipeline.
//!
//! The crate builds a complete text-to-visual-feature ZSL system:
//!
//! 1. per-class articles are normalised ([`corpus`]) and class names are
//!    embedded with word vectors ([`embed`]),
//! 2. a class similarity matrix drives knowledge-sharing augmentation,
//!    merging each class's article with its top-k most similar classes
//!    ([`ks`]),
//! 3. augmented articles are encoded as L2-normalised TF-IDF semantic
//!    vectors ([`tfidf`]),
//! 4. a conditional GAN with an auxiliary class head maps semantic
//!    vectors plus noise to pseudo visual features ([`gan`]) on top of a
//!    small dense-network kernel ([`nn`]),
//! 5. zero-shot and generalized zero-shot performance is measured with
//!    KNN, Top-1 accuracy and the seen-unseen accuracy curve ([`eval`]).
//!
//! [`pipeline`] orchestrates the stages with content-hash caching,
//! [`fixture`] generates synthetic desk-scale datasets for end-to-end
//! testing, and the `kszsl` binary exposes everything as subcommands.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod gan;
pub mod ks;
pub mod nn;
pub mod pipeline;
pub mod porter;
pub mod rng;
pub mod tfidf;

pub use error::{Error, Result};
