use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::LabelVector;
use crate::weighting::WeightSet;

/// Term weights of the symmetric two-view objective. For anchor `i` in one
/// view, candidate `k` of the other view enters the numerator with weight
/// `num[i,k]` and the denominator with `den_inter[i,k]`; candidate `k` of the
/// anchor's own view enters the denominator with `den_intra[i,k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewWeights {
    pub num: Array2<f64>,
    pub den_inter: Array2<f64>,
    pub den_intra: Option<Array2<f64>>,
}

fn off_diagonal_ones(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, k)| if i == k { 0.0 } else { 1.0 })
}

impl TwoViewWeights {
    /// GRACE: the counterpart is the only positive; every other node of
    /// both views is a negative.
    pub fn baseline(n: usize, intra_view: bool) -> Self {
        TwoViewWeights {
            num: Array2::eye(n),
            den_inter: Array2::ones((n, n)),
            den_intra: intra_view.then(|| off_diagonal_ones(n)),
        }
    }

    /// Weighted positives over the opposite view and weighted negatives
    /// over the negative candidates. Negative weights are rescaled per
    /// anchor to mean one over the candidate set actually used (the
    /// opposite view, plus the own view minus the anchor when intra-view
    /// negatives are on). The counterpart term is added with weight one.
    pub fn enhanced(ws: &WeightSet, intra_view: bool) -> Result<Self> {
        Self::check(ws)?;
        let (den_inter, den_intra) = Self::weighted_negatives(ws, intra_view);
        Ok(TwoViewWeights { num: ws.positive.clone(), den_inter, den_intra })
    }

    /// Weighted positives, uniform negatives.
    pub fn positive_only(ws: &WeightSet, intra_view: bool) -> Result<Self> {
        let base = Self::baseline(Self::check(ws)?, intra_view);
        Ok(TwoViewWeights { num: ws.positive.clone(), ..base })
    }

    /// Counterpart-only positive, weighted negatives.
    pub fn negative_only(ws: &WeightSet, intra_view: bool) -> Result<Self> {
        let n = Self::check(ws)?;
        let (den_inter, den_intra) = Self::weighted_negatives(ws, intra_view);
        Ok(TwoViewWeights { num: Array2::eye(n), den_inter, den_intra })
    }

    /// Label oracle: same-label nodes other than the anchor are positives;
    /// the counterpart and different-label nodes form the denominator.
    pub fn label_oracle(labels: &LabelVector, intra_view: bool) -> Self {
        let n = labels.len();
        let y = labels.as_slice();
        let same = Array2::from_shape_fn((n, n), |(i, k)| f64::from(u8::from(i != k && y[i] == y[k])));
        let diff = Array2::from_shape_fn((n, n), |(i, k)| f64::from(u8::from(y[i] != y[k])));
        TwoViewWeights {
            num: same,
            den_inter: &diff + &Array2::<f64>::eye(n),
            den_intra: intra_view.then_some(diff),
        }
    }

    pub fn size(&self) -> usize {
        self.num.nrows()
    }

    fn check(ws: &WeightSet) -> Result<usize> {
        let n = ws.anchors();
        if ws.positive.dim() != (n, n) || ws.negative.dim() != (n, n) {
            return Err(Error::Input("two-view weights must be square over the node set".into()));
        }
        Ok(n)
    }

    fn weighted_negatives(ws: &WeightSet, intra_view: bool) -> (Array2<f64>, Option<Array2<f64>>) {
        let n = ws.anchors();
        let w = &ws.negative;
        if !intra_view {
            return (w + &Array2::<f64>::eye(n), None);
        }
        let mut inter = w.clone();
        let mut intra = w.clone();
        for i in 0..n {
            intra[[i, i]] = 0.0;
            let total = inter.row(i).sum() + intra.row(i).sum();
            let scale = if total > 0.0 { (2 * n - 1) as f64 / total } else { 1.0 };
            inter.row_mut(i).mapv_inplace(|v| v * scale);
            intra.row_mut(i).mapv_inplace(|v| v * scale);
            inter[[i, i]] += 1.0;
        }
        (inter, Some(intra))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewLoss {
    /// Mean over non-skipped anchors of both views.
    pub loss: f64,
    pub grad1: Array2<f64>,
    pub grad2: Array2<f64>,
    pub skipped: usize,
}

struct Direction {
    loss_sum: f64,
    valid: usize,
    /// `∂loss/∂S_ab` (unscaled by the anchor count).
    g_inter: Array2<f64>,
    g_intra: Option<Array2<f64>>,
}

fn direction(za: ArrayView2<'_, f64>, zb: ArrayView2<'_, f64>, w: &TwoViewWeights, tau: f64) -> Direction {
    let n = za.nrows();
    let s = za.dot(&zb.t()) / tau;
    let t = w.den_intra.as_ref().map(|_| za.dot(&za.t()) / tau);
    let mut g_inter = Array2::zeros((n, n));
    let mut g_intra = w.den_intra.as_ref().map(|_| Array2::zeros((n, n)));
    let mut loss_sum = 0.0;
    let mut valid = 0;
    for i in 0..n {
        let mut max = f64::NEG_INFINITY;
        for k in 0..n {
            if w.num[[i, k]] > 0.0 || w.den_inter[[i, k]] > 0.0 {
                max = max.max(s[[i, k]]);
            }
        }
        if let (Some(c), Some(t)) = (&w.den_intra, &t) {
            for k in 0..n {
                if c[[i, k]] > 0.0 {
                    max = max.max(t[[i, k]]);
                }
            }
        }
        let (mut ns, mut ds) = (0.0, 0.0);
        for k in 0..n {
            let e = (s[[i, k]] - max).exp();
            ns += w.num[[i, k]] * e;
            ds += w.den_inter[[i, k]] * e;
        }
        if let (Some(c), Some(t)) = (&w.den_intra, &t) {
            for k in 0..n {
                ds += c[[i, k]] * (t[[i, k]] - max).exp();
            }
        }
        if !(ns > 0.0 && ds > 0.0) {
            continue;
        }
        loss_sum += ds.ln() - ns.ln();
        valid += 1;
        for k in 0..n {
            let e = (s[[i, k]] - max).exp();
            g_inter[[i, k]] = (w.den_inter[[i, k]] / ds - w.num[[i, k]] / ns) * e;
        }
        if let (Some(c), Some(t), Some(g)) = (&w.den_intra, &t, &mut g_intra) {
            for k in 0..n {
                g[[i, k]] = c[[i, k]] / ds * (t[[i, k]] - max).exp();
            }
        }
    }
    Direction { loss_sum, valid, g_inter, g_intra }
}

/// Symmetric two-view contrastive loss: every node of view 1 is an anchor
/// against view 2 and vice versa, and the per-anchor losses are averaged.
pub fn two_view_loss(
    z1: ArrayView2<'_, f64>,
    z2: ArrayView2<'_, f64>,
    w: &TwoViewWeights,
    tau: f64,
) -> Result<TwoViewLoss> {
    let n = z1.nrows();
    if z2.dim() != z1.dim() {
        return Err(Error::Input(format!("view shapes differ: {:?} vs {:?}", z1.dim(), z2.dim())));
    }
    let shapes_ok = w.num.dim() == (n, n)
        && w.den_inter.dim() == (n, n)
        && w.den_intra.as_ref().is_none_or(|c| c.dim() == (n, n));
    if !shapes_ok {
        return Err(Error::Input(format!("weights do not match {n} anchors")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let d12 = direction(z1, z2, w, tau);
    let d21 = direction(z2, z1, w, tau);
    let valid = d12.valid + d21.valid;
    let skipped = 2 * n - valid;
    let mut grad1 = Array2::zeros(z1.raw_dim());
    let mut grad2 = Array2::zeros(z2.raw_dim());
    if valid == 0 {
        if n > 0 {
            log::warn!("every anchor has an empty numerator; two-view loss is 0");
        }
        return Ok(TwoViewLoss { loss: 0.0, grad1, grad2, skipped });
    }
    let scale = 1.0 / (tau * valid as f64);
    // S_ab = Za·Zbᵀ/τ: ∂Za = G·Zb, ∂Zb = Gᵀ·Za; S_aa adds (G + Gᵀ)·Za.
    let accumulate = |d: &Direction, za: ArrayView2<'_, f64>, zb: ArrayView2<'_, f64>, ga: &mut Array2<f64>, gb: &mut Array2<f64>| {
        *ga += &(d.g_inter.dot(&zb) * scale);
        *gb += &(d.g_inter.t().dot(&za) * scale);
        if let Some(g) = &d.g_intra {
            *ga += &((g + &g.t()).dot(&za) * scale);
        }
    };
    accumulate(&d12, z1, z2, &mut grad1, &mut grad2);
    accumulate(&d21, z2, z1, &mut grad2, &mut grad1);
    Ok(TwoViewLoss {
        loss: (d12.loss_sum + d21.loss_sum) / valid as f64,
        grad1,
        grad2,
        skipped,
    })
}
