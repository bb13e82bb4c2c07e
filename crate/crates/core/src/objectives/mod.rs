//! Contrastive objectives with analytic gradients.
//!
//! Every loss here is a weighted log-ratio
//! `−log Σ_j a_j e^{s_j/τ} + log Σ_k b_k e^{t_k/τ}` over dot products of
//! embedding rows. Per-anchor losses take one embedding matrix plus row
//! indices and return gradients shaped like that matrix; the batched forms
//! work on whole views at once.

mod contrastive;
mod neighborhood;
mod supervised;
mod theorem;
mod two_view;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contrastive::{enhanced_loss, ideal_loss, infonce, sampled_ideal_loss};
pub use neighborhood::{enhanced_nc_loss, nc_loss, neighborhood_loss};
pub use supervised::{combined_loss, cross_entropy, CombinedLoss};
pub use theorem::{theorem1_gap, GapStats, Population};
pub use two_view::{two_view_loss, TwoViewLoss, TwoViewWeights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveConfig {
    /// Contrastive temperature.
    pub tau: f64,
    /// Positive-sum scale for the sampled objective; `None` means the number
    /// of negative samples.
    pub l: Option<f64>,
    /// Negative-sum scale for the sampled objective; `None` means the number
    /// of positive samples.
    pub q: Option<f64>,
    /// Hop power of `Â` in the neighborhood loss.
    pub nc_r: usize,
    /// Weight of the neighborhood loss against cross-entropy.
    pub lambda_nc: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            tau: 0.5,
            l: None,
            q: None,
            nc_r: 2,
            lambda_nc: 1.0,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.nc_r == 0 {
            return Err(Error::Config("nc_r must be at least 1".into()));
        }
        if !(self.lambda_nc >= 0.0 && self.lambda_nc.is_finite()) {
            return Err(Error::Config(format!("lambda_nc must be nonnegative, got {}", self.lambda_nc)));
        }
        if self.l.is_some_and(|l| l.is_nan() || l <= 0.0) || self.q.is_some_and(|q| q.is_nan() || q < 0.0) {
            return Err(Error::Config("l must be positive and q nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub loss: f64,
    /// Gradient with respect to the embedding matrix that was passed in.
    pub grad: Array2<f64>,
    /// Anchors dropped because their numerator was empty.
    pub skipped: usize,
}

/// Value and score gradients of one weighted log-ratio.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LogRatio {
    pub loss: f64,
    /// `∂loss/∂s_j` for the numerator scores.
    pub num_coef: Vec<f64>,
    /// `∂loss/∂t_k` for the denominator scores.
    pub den_coef: Vec<f64>,
}

/// `−log Σ a_j e^{s_j/τ} + log Σ b_k e^{t_k/τ}` with max-subtraction.
/// Returns `None` when either weighted sum is empty. Weights must be
/// nonnegative.
pub(crate) fn log_ratio(num_w: &[f64], num_s: &[f64], den_w: &[f64], den_s: &[f64], tau: f64) -> Option<LogRatio> {
    let (num_lse, num_p) = weighted_softmax(num_w, num_s, tau)?;
    let (den_lse, den_p) = weighted_softmax(den_w, den_s, tau)?;
    Some(LogRatio {
        loss: den_lse - num_lse,
        num_coef: num_p.iter().map(|p| -p / tau).collect(),
        den_coef: den_p.iter().map(|p| p / tau).collect(),
    })
}

/// `log Σ w_j e^{s_j/τ}` and the normalized terms.
fn weighted_softmax(w: &[f64], s: &[f64], tau: f64) -> Option<(f64, Vec<f64>)> {
    let max = w
        .iter()
        .zip(s)
        .filter(|(&wj, _)| wj > 0.0)
        .map(|(_, &sj)| sj / tau)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut terms: Vec<f64> = w
        .iter()
        .zip(s)
        .map(|(&wj, &sj)| if wj > 0.0 { wj * (sj / tau - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = terms.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return None;
    }
    for t in &mut terms {
        *t /= total;
    }
    Some((max + total.ln(), terms))
}
