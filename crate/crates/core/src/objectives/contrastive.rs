use ndarray::{Array2, ArrayView2};

use super::{log_ratio, LossResult};
use crate::error::{Error, Result};
use crate::graph::LabelVector;

fn check_rows(emb: ArrayView2<'_, f64>, rows: impl IntoIterator<Item = usize>) -> Result<()> {
    let n = emb.nrows();
    for r in rows {
        if r >= n {
            return Err(Error::Input(format!("row {r} out of range for {n} embeddings")));
        }
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("tau must be positive, got {tau}")))
    }
}

/// `−log Σ_j a_j e^{z_v·z_j/τ} / Σ_k b_k e^{z_v·z_k/τ}` for one anchor, with
/// `num` and `den` given as `(row, weight)` pairs.
fn anchor_loss(
    emb: ArrayView2<'_, f64>,
    anchor: usize,
    num: &[(usize, f64)],
    den: &[(usize, f64)],
    tau: f64,
) -> Result<LossResult> {
    check_tau(tau)?;
    check_rows(emb, std::iter::once(anchor).chain(num.iter().chain(den).map(|&(r, _)| r)))?;
    if let Some(&(_, w)) = num.iter().chain(den).find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::Input(format!("weights must be finite and nonnegative, got {w}")));
    }
    let a = emb.row(anchor);
    let score = |terms: &[(usize, f64)]| -> (Vec<f64>, Vec<f64>) {
        terms.iter().map(|&(r, w)| (w, a.dot(&emb.row(r)))).unzip()
    };
    let (nw, ns) = score(num);
    let (dw, ds) = score(den);
    let mut grad = Array2::zeros(emb.raw_dim());
    let Some(ratio) = log_ratio(&nw, &ns, &dw, &ds, tau) else {
        return Ok(LossResult { loss: 0.0, grad, skipped: 1 });
    };
    let terms = num.iter().zip(&ratio.num_coef).chain(den.iter().zip(&ratio.den_coef));
    for (&(r, _), &c) in terms {
        if c == 0.0 {
            continue;
        }
        // ∂(z_v·z_r) adds z_r to the anchor row and z_v to row r.
        let zr = emb.row(r).to_owned();
        grad.row_mut(anchor).scaled_add(c, &zr);
        grad.row_mut(r).scaled_add(c, &a);
    }
    Ok(LossResult { loss: ratio.loss, grad, skipped: 0 })
}

/// Standard InfoNCE for one anchor: the positive row against itself plus
/// the negative rows. An empty negative set gives exactly zero.
pub fn infonce(
    emb: ArrayView2<'_, f64>,
    anchor: usize,
    positive: usize,
    negatives: &[usize],
    tau: f64,
) -> Result<LossResult> {
    let num = [(positive, 1.0)];
    let den: Vec<_> = std::iter::once((positive, 1.0))
        .chain(negatives.iter().map(|&k| (k, 1.0)))
        .collect();
    anchor_loss(emb, anchor, &num, &den, tau)
}

/// Label-oracle objective. Rows `0..labels.len()` are the labelled node set;
/// the numerator runs over same-label rows other than the anchor and the
/// denominator over the counterpart plus every different-label row. An
/// anchor alone in its class is skipped.
pub fn ideal_loss(
    emb: ArrayView2<'_, f64>,
    labels: &LabelVector,
    anchor: usize,
    counterpart: usize,
    tau: f64,
) -> Result<LossResult> {
    let n = labels.len();
    if anchor >= n || n > emb.nrows() {
        return Err(Error::Input(format!(
            "anchor {anchor} must be one of the {n} labelled rows of {} embeddings",
            emb.nrows()
        )));
    }
    let y = labels.get(anchor);
    let num: Vec<_> = (0..n).filter(|&j| j != anchor && labels.get(j) == y).map(|j| (j, 1.0)).collect();
    let den: Vec<_> = std::iter::once((counterpart, 1.0))
        .chain((0..n).filter(|&j| labels.get(j) != y).map(|j| (j, 1.0)))
        .collect();
    anchor_loss(emb, anchor, &num, &den, tau)
}

/// `−log (l/m)Σ e^{z_v·z_j/τ} / (e^{z_v·z_c/τ} + (q/n)Σ e^{z_v·z_k/τ})` over
/// sampled positive and negative rows (repeats allowed).
#[allow(clippy::too_many_arguments)]
pub fn sampled_ideal_loss(
    emb: ArrayView2<'_, f64>,
    anchor: usize,
    counterpart: usize,
    positives: &[usize],
    negatives: &[usize],
    l: f64,
    q: f64,
    tau: f64,
) -> Result<LossResult> {
    if !(l > 0.0 && l.is_finite()) || !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Config(format!("need l > 0 and q >= 0, got l={l}, q={q}")));
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Input("sampled objective needs at least one positive and one negative".into()));
    }
    let wp = l / positives.len() as f64;
    let wn = q / negatives.len() as f64;
    let num: Vec<_> = positives.iter().map(|&j| (j, wp)).collect();
    let den: Vec<_> = std::iter::once((counterpart, 1.0))
        .chain(negatives.iter().map(|&k| (k, wn)))
        .collect();
    anchor_loss(emb, anchor, &num, &den, tau)
}

/// Importance-weighted objective:
/// `−log Σ_j w⁺_j e^{z_v·z_j/τ} / (e^{z_v·z_c/τ} + Σ_k w⁻_k e^{z_v·z_k/τ})`.
#[allow(clippy::too_many_arguments)]
pub fn enhanced_loss(
    emb: ArrayView2<'_, f64>,
    anchor: usize,
    counterpart: usize,
    vm: &[usize],
    w_pos: &[f64],
    vn: &[usize],
    w_neg: &[f64],
    tau: f64,
) -> Result<LossResult> {
    if vm.len() != w_pos.len() || vn.len() != w_neg.len() {
        return Err(Error::Input(format!(
            "candidate/weight length mismatch: |V_M|={} vs {} weights, |V_N|={} vs {} weights",
            vm.len(),
            w_pos.len(),
            vn.len(),
            w_neg.len()
        )));
    }
    let num: Vec<_> = vm.iter().copied().zip(w_pos.iter().copied()).collect();
    let den: Vec<_> = std::iter::once((counterpart, 1.0))
        .chain(vn.iter().copied().zip(w_neg.iter().copied()))
        .collect();
    anchor_loss(emb, anchor, &num, &den, tau)
}
