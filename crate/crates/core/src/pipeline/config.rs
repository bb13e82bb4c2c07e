use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::data::SplitSpec;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveConfig;
use crate::rng;
use crate::similarity::SimilarityConfig;
use crate::weighting::TemperaturePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Two-view contrastive pretraining of a GCN, evaluated by a linear probe.
    Grace,
    /// MLP trained with cross-entropy plus a neighborhood contrastive loss.
    Graphmlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Baseline,
    /// Weighted positives and weighted negatives.
    Enhanced,
    /// Weighted positives only.
    #[serde(rename = "enhanced-p")]
    EnhancedP,
    /// Weighted negatives only.
    #[serde(rename = "enhanced-n")]
    EnhancedN,
    /// Enhanced with structural similarity only (`β = 0`).
    #[serde(rename = "enhanced-g")]
    EnhancedG,
    /// Enhanced with feature similarity only (`β = 1`).
    #[serde(rename = "enhanced-f")]
    EnhancedF,
    /// Ground-truth labels define positives and negatives (diagnostic).
    IdealOracle,
}

impl Variant {
    /// The six variants of the ablation grid, in table order.
    pub const ABLATION: [Variant; 6] = [
        Variant::Baseline,
        Variant::Enhanced,
        Variant::EnhancedP,
        Variant::EnhancedN,
        Variant::EnhancedG,
        Variant::EnhancedF,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Enhanced => "enhanced",
            Variant::EnhancedP => "enhanced-p",
            Variant::EnhancedN => "enhanced-n",
            Variant::EnhancedG => "enhanced-g",
            Variant::EnhancedF => "enhanced-f",
            Variant::IdealOracle => "ideal-oracle",
        }
    }

    /// Whether the variant needs similarity-derived weights.
    pub fn uses_weights(self) -> bool {
        !matches!(self, Variant::Baseline | Variant::IdealOracle)
    }

    /// `β` override for the G/F variants.
    pub fn beta_override(self) -> Option<f64> {
        match self {
            Variant::EnhancedG => Some(0.0),
            Variant::EnhancedF => Some(1.0),
            _ => None,
        }
    }
}

/// Edge-drop and feature-mask rates of one view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewRates {
    pub p_edge: f64,
    pub p_feat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub lr: f64,
    /// ℓ2 penalty on the probe weights (not the bias).
    pub weight_decay: f64,
    pub iterations: usize,
    /// Validation accuracy is checked every this many iterations.
    pub eval_every: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { lr: 0.01, weight_decay: 1e-4, iterations: 300, eval_every: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: Model,
    pub variant: Variant,
    pub similarity: SimilarityConfig,
    pub temperatures: TemperaturePair,
    pub objective: ObjectiveConfig,
    pub augment: [ViewRates; 2],
    /// Encoder width `d1`.
    pub hidden_dim: usize,
    /// Projector (GRACE) or embedding (Graph-MLP) width `d2`.
    pub proj_dim: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Nodes per step; 0 uses the full graph.
    pub batch_size: usize,
    pub seed: u64,
    /// Include same-view nodes as negatives in the two-view loss.
    pub intra_view_negatives: bool,
    pub probe: ProbeConfig,
    pub split: SplitSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: Model::Grace,
            variant: Variant::Baseline,
            similarity: SimilarityConfig::default(),
            temperatures: TemperaturePair::default(),
            objective: ObjectiveConfig::default(),
            augment: [ViewRates { p_edge: 0.2, p_feat: 0.2 }, ViewRates { p_edge: 0.3, p_feat: 0.3 }],
            hidden_dim: 64,
            proj_dim: 64,
            epochs: 100,
            lr: 0.005,
            batch_size: 0,
            seed: 0,
            intra_view_negatives: true,
            probe: ProbeConfig::default(),
            split: SplitSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.similarity.validate()?;
        self.temperatures.validate()?;
        self.objective.validate()?;
        for (i, r) in self.augment.iter().enumerate() {
            AugmentConfig { p_edge: r.p_edge, p_feat: r.p_feat, seed: 0 }
                .validate()
                .map_err(|e| Error::Config(format!("augment[{i}]: {e}")))?;
        }
        if self.hidden_dim == 0 || self.proj_dim == 0 {
            return Err(Error::Config("hidden_dim and proj_dim must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        let p = &self.probe;
        if !(p.lr > 0.0) || !(p.weight_decay >= 0.0) || p.eval_every == 0 {
            return Err(Error::Config("probe needs lr > 0, weight_decay >= 0 and eval_every >= 1".into()));
        }
        if self.model == Model::Graphmlp && self.variant == Variant::IdealOracle {
            return Err(Error::Config("variant ideal-oracle is only defined for model grace".into()));
        }
        Ok(())
    }

    /// Similarity settings after the variant's `β` override.
    pub fn effective_similarity(&self) -> SimilarityConfig {
        let mut s = self.similarity.clone();
        if let Some(beta) = self.variant.beta_override() {
            s.beta = beta;
        }
        s
    }

    /// Augmentation settings of both views at `epoch`.
    pub fn view_configs(&self, epoch: usize) -> (AugmentConfig, AugmentConfig) {
        let make = |i: usize| {
            let r = self.augment[i];
            AugmentConfig {
                p_edge: r.p_edge,
                p_feat: r.p_feat,
                seed: rng::derive_seed(self.seed, "augment", (epoch * 2 + i) as u64),
            }
        };
        (make(0), make(1))
    }

    pub fn hash(&self) -> u64 {
        crate::fingerprint::config_hash(self)
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        ExperimentConfig { variant, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ExperimentConfig { seed, ..self.clone() }
    }
}
