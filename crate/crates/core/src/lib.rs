//! Similarity-weighted graph contrastive learning.
//!
//! Node similarity from personalized PageRank and feature cosine is turned
//! into per-anchor positive and negative importance weights, which reweight
//! InfoNCE-style and neighborhood-contrastive objectives. The crate ships a
//! small GCN and MLP with hand-written gradients, two-view augmentation,
//! training pipelines, a linear probe and a synthetic block-model generator.

pub mod augment;
pub mod data;
pub mod error;
pub mod fingerprint;
pub mod graph;
pub mod nn;
pub mod objectives;
pub mod pipeline;
pub mod rng;
pub mod similarity;
pub mod weighting;

pub use error::{Error, Result};
