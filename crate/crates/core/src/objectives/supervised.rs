use ndarray::{Array2, ArrayView2};

use super::LossResult;
use crate::error::{Error, Result};

/// Mean softmax cross-entropy over the rows in `idx`, with the gradient
/// with respect to all logits (zero outside `idx`).
pub fn cross_entropy(logits: ArrayView2<'_, f64>, labels: &[usize], idx: &[usize]) -> Result<(f64, Array2<f64>)> {
    if idx.is_empty() {
        return Err(Error::Input("cross-entropy needs a nonempty index set".into()));
    }
    let (n, c) = logits.dim();
    let mut grad = Array2::zeros((n, c));
    let mut total = 0.0;
    let scale = 1.0 / idx.len() as f64;
    for &i in idx {
        if i >= n || i >= labels.len() {
            return Err(Error::Input(format!("row {i} out of range for {n} logits")));
        }
        let y = labels[i];
        if y >= c {
            return Err(Error::Input(format!("label {y} out of range for {c} classes")));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse - row[y];
        let mut g = grad.row_mut(i);
        for k in 0..c {
            g[k] = (row[k] - lse).exp() * scale;
        }
        g[y] -= scale;
    }
    Ok((total * scale, grad))
}

/// `L_CE + λ·L_NC` with both gradient pieces; the neighborhood gradient is
/// already scaled by `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedLoss {
    pub loss: f64,
    pub grad_logits: Array2<f64>,
    pub grad_embedding: Array2<f64>,
}

pub fn combined_loss(ce: (f64, Array2<f64>), nc: &LossResult, lambda_nc: f64) -> Result<CombinedLoss> {
    if !(lambda_nc >= 0.0 && lambda_nc.is_finite()) {
        return Err(Error::Config(format!("lambda_nc must be nonnegative, got {lambda_nc}")));
    }
    Ok(CombinedLoss {
        loss: ce.0 + lambda_nc * nc.loss,
        grad_logits: ce.1,
        grad_embedding: &nc.grad * lambda_nc,
    })
}
