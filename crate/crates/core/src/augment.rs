//! Two-view augmentation: independent edge removal and feature-dimension
//! masking. Node `i` of each view is node `i` of the original graph.

use ndarray::Axis;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    /// Probability of removing each undirected edge.
    pub p_edge: f64,
    /// Probability of zeroing each feature dimension.
    pub p_feat: f64,
    pub seed: u64,
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_edge", self.p_edge), ("p_feat", self.p_feat)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub seed: u64,
}

/// Removes each undirected edge independently with probability `p`.
pub fn drop_edges(g: &Graph, p: f64, rng: &mut Rng) -> Graph {
    g.filter_edges(|_, _| !rng.random_bool(p))
}

/// Zeroes each feature column independently with probability `p`; the same
/// column mask applies to every node.
pub fn mask_features(x: &FeatureMatrix, p: f64, rng: &mut Rng) -> FeatureMatrix {
    let mut out = x.as_array().clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        if rng.random_bool(p) {
            col.fill(0.0);
        }
    }
    FeatureMatrix::new(out).expect("masking keeps entries finite")
}

pub fn augment(g: &Graph, x: &FeatureMatrix, cfg: &AugmentConfig) -> Result<View> {
    cfg.validate()?;
    let mut edge_rng = rng::stream(cfg.seed, "augment/edges", 0);
    let mut feat_rng = rng::stream(cfg.seed, "augment/features", 0);
    Ok(View {
        graph: drop_edges(g, cfg.p_edge, &mut edge_rng),
        features: mask_features(x, cfg.p_feat, &mut feat_rng),
        seed: cfg.seed,
    })
}

pub fn make_views(
    g: &Graph,
    x: &FeatureMatrix,
    cfg1: &AugmentConfig,
    cfg2: &AugmentConfig,
) -> Result<(View, View)> {
    if g.node_count() != x.rows() {
        return Err(Error::Input(format!(
            "graph has {} nodes but features have {} rows",
            g.node_count(),
            x.rows()
        )));
    }
    // Tag each view so equal seeds in both configs still give distinct streams.
    let v1 = augment(g, x, &AugmentConfig { seed: rng::derive_seed(cfg1.seed, "view", 1), ..*cfg1 })?;
    let v2 = augment(g, x, &AugmentConfig { seed: rng::derive_seed(cfg2.seed, "view", 2), ..*cfg2 })?;
    Ok((v1, v2))
}
