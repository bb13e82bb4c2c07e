//! Anchor-aware importance weights.
//!
//! Positive weights use `T(s) = exp(s/τ_p) − 1`, negative weights use
//! `D(s) = exp(−s/τ_n)`; each is divided by its mean over the candidate set,
//! so every anchor's weight vector has mean one. Candidates are drawn
//! uniformly, so the base density cancels out of the importance ratio.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// Largest exponent handed to `exp` by the scalar transform.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemperaturePair {
    pub tau_p: f64,
    pub tau_n: f64,
}

impl Default for TemperaturePair {
    fn default() -> Self {
        TemperaturePair {
            tau_p: 0.1,
            tau_n: 1.0,
        }
    }
}

impl TemperaturePair {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_p", self.tau_p), ("tau_n", self.tau_n)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "temperatures.{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `exp(s/τ_p) − 1`, with the exponent clamped at [`MAX_EXPONENT`].
pub fn transform_pos(s: f64, tau_p: f64) -> f64 {
    let mut e = s / tau_p;
    if e > MAX_EXPONENT {
        log::warn!("positive transform exponent {e:.1} clamped to {MAX_EXPONENT}");
        e = MAX_EXPONENT;
    }
    e.exp_m1()
}

/// `exp(−s/τ_n)`.
pub fn transform_neg(s: f64, tau_n: f64) -> f64 {
    (-s / tau_n).exp()
}

fn check_sims(sims: &[f64], what: &str) -> Result<()> {
    if sims.is_empty() {
        return Err(Error::Input(format!("{what}: candidate set is empty")));
    }
    if let Some(s) = sims.iter().find(|s| !s.is_finite()) {
        return Err(Error::Input(format!("{what}: non-finite similarity {s}")));
    }
    Ok(())
}

fn normalize_by_mean(mut t: Vec<f64>) -> Vec<f64> {
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    for v in &mut t {
        *v /= mean;
    }
    t
}

/// Mean-one positive weights for a row of candidate similarities.
///
/// `T(s_j) / mean_k T(s_k)` is invariant to a common factor, so when
/// `max(s)/τ_p` would overflow the values are rescaled by `exp(−max/τ_p)`
/// instead of clamped. All-zero transforms fall back to uniform weights.
pub fn positive_weights_from_sims(sims: &[f64], tau_p: f64) -> Result<Vec<f64>> {
    check_sims(sims, "positive weights")?;
    if let Some(s) = sims.iter().find(|&&s| s < 0.0) {
        return Err(Error::Input(format!(
            "positive weights need nonnegative similarity, got {s}; enable clamp_nonnegative"
        )));
    }
    let max = sims.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        log::warn!("all candidate similarities are zero; using uniform positive weights");
        return Ok(vec![1.0; sims.len()]);
    }
    let t: Vec<f64> = if max / tau_p <= MAX_EXPONENT {
        sims.iter().map(|&s| (s / tau_p).exp_m1()).collect()
    } else {
        let floor = (-max / tau_p).exp();
        sims.iter().map(|&s| ((s - max) / tau_p).exp() - floor).collect()
    };
    Ok(normalize_by_mean(t))
}

/// Mean-one negative weights for a row of candidate similarities, shifted by
/// the row minimum so the largest term is exactly one.
pub fn negative_weights_from_sims(sims: &[f64], tau_n: f64) -> Result<Vec<f64>> {
    check_sims(sims, "negative weights")?;
    let min = sims.iter().copied().fold(f64::INFINITY, f64::min);
    let d = sims.iter().map(|&s| (-(s - min) / tau_n).exp()).collect();
    Ok(normalize_by_mean(d))
}

fn gather(anchor: usize, sims: &SimilarityMatrix, candidates: &[usize]) -> Result<Vec<f64>> {
    let n = sims.size();
    if anchor >= n {
        return Err(Error::Input(format!("anchor {anchor} out of range for {n} nodes")));
    }
    candidates
        .iter()
        .map(|&j| {
            if j < n {
                Ok(sims.get(anchor, j))
            } else {
                Err(Error::Input(format!("candidate {j} out of range for {n} nodes")))
            }
        })
        .collect()
}

/// `w⁺` of `anchor` over the positive candidates `vm`.
pub fn positive_weights(
    anchor: usize,
    sims: &SimilarityMatrix,
    vm: &[usize],
    tau_p: f64,
) -> Result<Vec<f64>> {
    positive_weights_from_sims(&gather(anchor, sims, vm)?, tau_p)
}

/// `w⁻` of `anchor` over the negative candidates `vn`.
pub fn negative_weights(
    anchor: usize,
    sims: &SimilarityMatrix,
    vn: &[usize],
    tau_n: f64,
) -> Result<Vec<f64>> {
    negative_weights_from_sims(&gather(anchor, sims, vn)?, tau_n)
}

/// Positive (`V_M`) and negative (`V_N`) candidate node lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSets {
    pub vm: Vec<usize>,
    pub vn: Vec<usize>,
}

impl CandidateSets {
    pub fn new(vm: Vec<usize>, vn: Vec<usize>, n: usize) -> Result<Self> {
        if vm.is_empty() || vn.is_empty() {
            return Err(Error::Input("candidate sets must be nonempty".into()));
        }
        if let Some(&j) = vm.iter().chain(&vn).find(|&&j| j >= n) {
            return Err(Error::Input(format!("candidate {j} out of range for {n} nodes")));
        }
        Ok(CandidateSets { vm, vn })
    }

    /// `V_M = V_N = {0, .., n-1}`.
    pub fn all(n: usize) -> Self {
        CandidateSets {
            vm: (0..n).collect(),
            vn: (0..n).collect(),
        }
    }

    pub fn weights(
        &self,
        anchor: usize,
        sims: &SimilarityMatrix,
        temps: TemperaturePair,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            positive_weights(anchor, sims, &self.vm, temps.tau_p)?,
            negative_weights(anchor, sims, &self.vn, temps.tau_n)?,
        ))
    }
}

/// Per-anchor weights laid out as matrices: row `a` holds anchor `a`'s
/// weights over candidate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub positive: Array2<f64>,
    pub negative: Array2<f64>,
}

impl WeightSet {
    /// Every node is an anchor and `V_M = V_N` is the whole node set.
    pub fn full(sims: &SimilarityMatrix, temps: TemperaturePair) -> Result<Self> {
        temps.validate()?;
        let n = sims.size();
        let mut positive = Array2::zeros((n, n));
        let mut negative = Array2::zeros((n, n));
        for i in 0..n {
            let row: Vec<f64> = sims.view().row(i).to_vec();
            let wp = positive_weights_from_sims(&row, temps.tau_p)?;
            let wn = negative_weights_from_sims(&row, temps.tau_n)?;
            positive.row_mut(i).assign(&ndarray::Array1::from(wp));
            negative.row_mut(i).assign(&ndarray::Array1::from(wn));
        }
        Ok(WeightSet { positive, negative })
    }

    /// Candidates for anchor `i` are all other rows of `sims`; the diagonal
    /// is zero and each row has mean one over its off-diagonal entries.
    pub fn excluding_self(sims: &SimilarityMatrix, temps: TemperaturePair) -> Result<Self> {
        temps.validate()?;
        let n = sims.size();
        if n < 2 {
            return Err(Error::Input("self-excluding weights need at least two nodes".into()));
        }
        let mut positive = Array2::zeros((n, n));
        let mut negative = Array2::zeros((n, n));
        for i in 0..n {
            let row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| sims.get(i, j)).collect();
            let wp = positive_weights_from_sims(&row, temps.tau_p)?;
            let wn = negative_weights_from_sims(&row, temps.tau_n)?;
            let cols = (0..n).filter(|&j| j != i);
            for ((j, p), q) in cols.zip(wp).zip(wn) {
                positive[[i, j]] = p;
                negative[[i, j]] = q;
            }
        }
        Ok(WeightSet { positive, negative })
    }

    pub fn anchors(&self) -> usize {
        self.positive.nrows()
    }

    /// Fingerprint of both weight matrices.
    pub fn fingerprint(&self) -> u64 {
        crate::fingerprint::hash_f64s(self.positive.iter().chain(self.negative.iter()))
    }
}
