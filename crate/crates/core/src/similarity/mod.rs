//! Pairwise node similarity: structural (personalized PageRank), feature
//! (cosine) and their fusion `β·γ·sim_F + (1−β)·sim_G`.
//!
//! Similarities are always computed on the unperturbed graph and features.

pub mod cache;

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, NormalizedAdjacency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructuralMode {
    /// `sim_G(i, j) = P̂[i, j]`.
    PprEntry,
    /// `sim_G(i, j) = cos(P̂[i, :], P̂[j, :])`.
    PprRowCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// `γ = Σ sim_G / Σ sim_F` over ordered off-diagonal pairs.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilarityConfig {
    /// Teleport probability, in (0, 1).
    pub alpha_ppr: f64,
    /// Number of propagation steps for the PPR approximation.
    pub iterations: usize,
    pub structural_mode: StructuralMode,
    /// Weight on the feature similarity, in [0, 1].
    pub beta: f64,
    pub gamma: GammaMode,
    pub clamp_nonnegative: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            alpha_ppr: 0.15,
            iterations: 20,
            structural_mode: StructuralMode::PprRowCosine,
            beta: 0.5,
            gamma: GammaMode::Auto,
            clamp_nonnegative: true,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_ppr > 0.0 && self.alpha_ppr < 1.0) {
            return Err(Error::Config(format!(
                "similarity.alpha_ppr must be in (0, 1), got {}",
                self.alpha_ppr
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!(
                "similarity.beta must be in [0, 1], got {}",
                self.beta
            )));
        }
        if let GammaMode::Fixed(g) = self.gamma {
            if !g.is_finite() {
                return Err(Error::Config("similarity.gamma must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Structural,
    Feature,
    Fused,
}

/// Dense `n×n` similarity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Array2<f64>,
    kind: SimilarityKind,
}

impl SimilarityMatrix {
    pub fn new(values: Array2<f64>, kind: SimilarityKind) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Input(format!(
                "similarity matrix must be square, got {:?}",
                values.dim()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("similarity matrix has non-finite entries".into()));
        }
        Ok(SimilarityMatrix { values, kind })
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.values
    }

    /// Submatrix over `idx × idx`.
    pub fn restrict(&self, idx: &[usize]) -> SimilarityMatrix {
        let values = self.values.select(Axis(0), idx).select(Axis(1), idx);
        SimilarityMatrix {
            values,
            kind: self.kind,
        }
    }

    /// `(min, mean, max)` over all entries.
    pub fn summary(&self) -> (f64, f64, f64) {
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = self.values.mean().unwrap_or(0.0);
        (min, mean, max)
    }
}

/// `P = α (I − (1−α) Â)^{-1}` by LU factorization. Meant as a reference for
/// small graphs.
pub fn ppr_exact(a: &NormalizedAdjacency, alpha: f64) -> Result<Array2<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Input(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let n = a.size();
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            m[(i, j)] -= (1.0 - alpha) * v;
        }
    }
    let inv = m
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("PPR system matrix is singular".into()))?;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| alpha * inv[(i, j)]))
}

/// Truncated PPR `(1−α)^K Â^K + Σ_{k<K} α(1−α)^k Â^k`, evaluated with the
/// recurrence `P̂ ← (1−α)·Â·P̂ + α·I` from `P̂ = I`.
pub fn ppr_iterative(a: &NormalizedAdjacency, alpha: f64, iterations: usize) -> Array2<f64> {
    let n = a.size();
    let mut p = Array2::eye(n);
    for _ in 0..iterations {
        let mut next = a.spmm(p.view()).expect("square operand");
        next *= 1.0 - alpha;
        for i in 0..n {
            next[[i, i]] += alpha;
        }
        p = next;
    }
    p
}

/// Pairwise cosine of rows; pairs involving a zero row score 0.
fn row_cosine(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut unit = x.to_owned();
    for mut row in unit.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let mut sim = unit.dot(&unit.t());
    // Rounding can push |cos| a hair past 1.
    sim.mapv_inplace(|v| v.clamp(-1.0, 1.0));
    sim
}

pub fn structural_similarity(p: &Array2<f64>, mode: StructuralMode) -> Result<SimilarityMatrix> {
    if p.nrows() != p.ncols() {
        return Err(Error::Input(format!("PPR matrix must be square, got {:?}", p.dim())));
    }
    let values = match mode {
        StructuralMode::PprEntry => p.clone(),
        StructuralMode::PprRowCosine => row_cosine(p.view()),
    };
    SimilarityMatrix::new(values, SimilarityKind::Structural)
}

pub fn feature_similarity(x: &FeatureMatrix) -> SimilarityMatrix {
    SimilarityMatrix {
        values: row_cosine(x.view()),
        kind: SimilarityKind::Feature,
    }
}

fn off_diagonal_sum(m: &Array2<f64>) -> f64 {
    let diag: f64 = m.diag().sum();
    m.sum() - diag
}

/// Resolves `γ` for the given inputs.
pub fn gamma(sim_g: &SimilarityMatrix, sim_f: &SimilarityMatrix, mode: GammaMode) -> Result<f64> {
    match mode {
        GammaMode::Fixed(g) => Ok(g),
        GammaMode::Auto => {
            let denom = off_diagonal_sum(&sim_f.values);
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Config(
                    "feature similarity sums to zero off the diagonal; automatic gamma is \
                     undefined, set a fixed gamma"
                        .into(),
                ));
            }
            Ok(off_diagonal_sum(&sim_g.values) / denom)
        }
    }
}

pub fn fuse(
    sim_g: &SimilarityMatrix,
    sim_f: &SimilarityMatrix,
    cfg: &SimilarityConfig,
) -> Result<SimilarityMatrix> {
    if sim_g.size() != sim_f.size() {
        return Err(Error::Input(format!(
            "cannot fuse {}x{} structural with {}x{} feature similarity",
            sim_g.size(),
            sim_g.size(),
            sim_f.size(),
            sim_f.size()
        )));
    }
    let beta = cfg.beta;
    // The feature term vanishes at β = 0, so γ is never needed there.
    let gamma = if beta == 0.0 {
        0.0
    } else {
        gamma(sim_g, sim_f, cfg.gamma)?
    };
    let mut values = Array2::zeros(sim_g.values.raw_dim());
    ndarray::Zip::from(&mut values)
        .and(&sim_f.values)
        .and(&sim_g.values)
        .for_each(|out, &f, &g| {
            let v = if beta == 0.0 {
                g
            } else if beta == 1.0 {
                f * gamma
            } else {
                beta * f * gamma + (1.0 - beta) * g
            };
            *out = if cfg.clamp_nonnegative { v.max(0.0) } else { v };
        });
    SimilarityMatrix::new(values, SimilarityKind::Fused)
}

/// Fused similarity of the original graph and features under `cfg`.
/// PPR uses `Â` without self-loops.
pub fn compute_similarity(
    g: &Graph,
    x: &FeatureMatrix,
    cfg: &SimilarityConfig,
) -> Result<SimilarityMatrix> {
    cfg.validate()?;
    if g.node_count() != x.rows() {
        return Err(Error::Input(format!(
            "graph has {} nodes but feature matrix has {} rows",
            g.node_count(),
            x.rows()
        )));
    }
    let sim_f = feature_similarity(x);
    // Auto γ still needs the structural sum when β = 1.
    if cfg.beta == 1.0 && matches!(cfg.gamma, GammaMode::Fixed(_)) {
        let empty = SimilarityMatrix {
            values: Array2::zeros((x.rows(), x.rows())),
            kind: SimilarityKind::Structural,
        };
        return fuse(&empty, &sim_f, cfg);
    }
    let a = NormalizedAdjacency::new(g, false);
    let p = ppr_iterative(&a, cfg.alpha_ppr, cfg.iterations);
    let sim_g = structural_similarity(&p, cfg.structural_mode)?;
    fuse(&sim_g, &sim_f, cfg)
}
