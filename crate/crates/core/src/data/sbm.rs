use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::io::Dataset;
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, LabelVector};
use crate::rng;

/// Stochastic block model with Gaussian class-conditional features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    /// Edge probability within a block.
    pub p_in: f64,
    /// Edge probability across blocks.
    pub p_out: f64,
    pub feature_dim: usize,
    /// Norm of each class mean vector.
    #[serde(default = "default_mean_norm")]
    pub mean_norm: f64,
    /// Standard deviation of the isotropic feature noise.
    pub noise: f64,
    pub seed: u64,
}

fn default_mean_norm() -> f64 {
    1.0
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::Config("block sizes must be nonempty and at least 1".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be at least 1".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(self.mean_norm >= 0.0 && self.mean_norm.is_finite()) {
            return Err(Error::Config("noise and mean_norm must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Class means with norm `scale`; mutually orthogonal when `d ≥ classes`.
fn class_means(classes: usize, d: usize, scale: f64, r: &mut rng::Rng) -> Array2<f64> {
    let mut means: Vec<Array1<f64>> = Vec::with_capacity(classes);
    while means.len() < classes {
        let mut v = Array1::from_shape_simple_fn(d, || r.sample::<f64, _>(StandardNormal));
        if means.len() < d {
            for u in &means {
                let proj = u.dot(&v);
                v.scaled_add(-proj, u);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            means.push(v / norm);
        }
    }
    let mut out = Array2::zeros((classes, d));
    for (c, m) in means.iter().enumerate() {
        out.row_mut(c).assign(&(m * scale));
    }
    out
}

pub fn gen_sbm(spec: &SbmSpec) -> Result<Dataset> {
    spec.validate()?;
    let labels: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &size)| std::iter::repeat_n(c, size))
        .collect();
    let n = labels.len();

    let mut edge_rng = rng::stream(spec.seed, "sbm/edges", 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { spec.p_in } else { spec.p_out };
            if edge_rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }

    let classes = spec.block_sizes.len();
    let means = class_means(classes, spec.feature_dim, spec.mean_norm, &mut rng::stream(spec.seed, "sbm/means", 0));
    let mut noise_rng = rng::stream(spec.seed, "sbm/noise", 0);
    let x = Array2::from_shape_fn((n, spec.feature_dim), |(i, j)| {
        let eps: f64 = noise_rng.sample(StandardNormal);
        means[[labels[i], j]] + spec.noise * eps
    });

    Ok(Dataset {
        graph: Graph::from_edges(n, &edges)?,
        features: FeatureMatrix::new(x)?,
        labels: LabelVector::with_classes(labels, classes)?,
    })
}
