use ndarray::{Array2, ArrayView2};

use super::LossResult;
use crate::error::{Error, Result};
use crate::weighting::WeightSet;

/// Mean over anchors `i` of
/// `−log Σ_{j≠i} A[i,j] e^{z_i·z_j/τ} / Σ_{k≠i} B[i,k] e^{z_i·z_k/τ}`.
/// Anchors with an empty numerator are skipped; if every anchor is skipped
/// the loss is zero.
pub fn neighborhood_loss(
    emb: ArrayView2<'_, f64>,
    num: ArrayView2<'_, f64>,
    den: ArrayView2<'_, f64>,
    tau: f64,
) -> Result<LossResult> {
    let b = emb.nrows();
    if num.dim() != (b, b) || den.dim() != (b, b) {
        return Err(Error::Input(format!(
            "weights of shape {:?} and {:?} do not match a batch of {b}",
            num.dim(),
            den.dim()
        )));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let s = emb.dot(&emb.t()) / tau;
    // coef[i,k] = ∂loss_i/∂s_ik (before the 1/τ and the batch mean).
    let mut coef = Array2::<f64>::zeros((b, b));
    let mut total = 0.0;
    let mut valid = 0usize;
    for i in 0..b {
        let mut max = f64::NEG_INFINITY;
        for k in (0..b).filter(|&k| k != i) {
            if num[[i, k]] > 0.0 || den[[i, k]] > 0.0 {
                max = max.max(s[[i, k]]);
            }
        }
        let (mut ns, mut ds) = (0.0, 0.0);
        for k in (0..b).filter(|&k| k != i) {
            let e = (s[[i, k]] - max).exp();
            ns += num[[i, k]] * e;
            ds += den[[i, k]] * e;
        }
        if !(ns > 0.0 && ds > 0.0) {
            continue;
        }
        total += ds.ln() - ns.ln();
        valid += 1;
        for k in (0..b).filter(|&k| k != i) {
            let e = (s[[i, k]] - max).exp();
            coef[[i, k]] = (den[[i, k]] / ds - num[[i, k]] / ns) * e;
        }
    }
    let skipped = b - valid;
    if valid == 0 {
        if b > 0 {
            log::warn!("every anchor in the batch has an empty numerator; neighborhood loss is 0");
        }
        return Ok(LossResult { loss: 0.0, grad: Array2::zeros(emb.raw_dim()), skipped });
    }
    let scale = 1.0 / (tau * valid as f64);
    let sym = (&coef + &coef.t()) * scale;
    Ok(LossResult {
        loss: total / valid as f64,
        grad: sym.dot(&emb),
        skipped,
    })
}

/// Neighborhood contrastive loss for a batch. `a_hat_r` is the dense `r`-th
/// power of the normalized adjacency over all nodes; `batch` maps rows of
/// `emb` to node ids.
pub fn nc_loss(
    emb: ArrayView2<'_, f64>,
    batch: &[usize],
    a_hat_r: ArrayView2<'_, f64>,
    tau: f64,
) -> Result<LossResult> {
    if batch.len() != emb.nrows() {
        return Err(Error::Input(format!("{} batch ids for {} embeddings", batch.len(), emb.nrows())));
    }
    let n = a_hat_r.nrows();
    if let Some(&i) = batch.iter().find(|&&i| i >= n) {
        return Err(Error::Input(format!("batch node {i} out of range for {n} nodes")));
    }
    let b = batch.len();
    let num = Array2::from_shape_fn((b, b), |(i, j)| a_hat_r[[batch[i], batch[j]]]);
    let den = Array2::ones((b, b));
    neighborhood_loss(emb, num.view(), den.view(), tau)
}

/// Weighted neighborhood loss; `weights` is indexed by batch position.
pub fn enhanced_nc_loss(emb: ArrayView2<'_, f64>, weights: &WeightSet, tau: f64) -> Result<LossResult> {
    neighborhood_loss(emb, weights.positive.view(), weights.negative.view(), tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, NormalizedAdjacency};
    use crate::nn::{grad_check_matrix, row_normalize};
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng as _;

    fn unit_rows(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::rng_from_seed(seed);
        row_normalize(&Array2::from_shape_simple_fn((n, d), || r.random_range(-1.0..1.0))).0
    }

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn two_connected_nodes() {
        let a = NormalizedAdjacency::new(&path(2), true).dense_power(1);
        let z = array![[1.0, 0.0], [1.0, 0.0]];
        let r = nc_loss(z.view(), &[0, 1], a.view(), 0.5).unwrap();
        assert_abs_diff_eq!(r.loss, -a[[0, 1]].ln(), epsilon = 1e-12);
    }

    #[test]
    fn no_pairs_within_reach_skips_all() {
        let a = NormalizedAdjacency::new(&Graph::empty(3), true).dense_power(2);
        let z = unit_rows(3, 2, 1);
        let r = nc_loss(z.view(), &[0, 1, 2], a.view(), 0.5).unwrap();
        assert_eq!((r.loss, r.skipped), (0.0, 3));
    }

    #[test]
    fn complete_graph_identical_embeddings() {
        let b = 5;
        let edges: Vec<_> = (0..b).flat_map(|i| (i + 1..b).map(move |j| (i, j))).collect();
        let a = NormalizedAdjacency::new(&Graph::from_edges(b, &edges).unwrap(), true).dense_power(1);
        let z = Array2::from_shape_fn((b, 2), |(_, j)| if j == 0 { 1.0 } else { 0.0 });
        let batch: Vec<usize> = (0..b).collect();
        let r = nc_loss(z.view(), &batch, a.view(), 0.7).unwrap();
        assert_abs_diff_eq!(r.loss, -a[[0, 1]].ln(), epsilon = 1e-12);
    }

    #[test]
    fn uniform_weights_cancel() {
        let z = unit_rows(6, 3, 2);
        let mut w = Array2::ones((6, 6));
        w.diag_mut().fill(0.0);
        let ws = WeightSet { positive: w.clone(), negative: w };
        assert_abs_diff_eq!(enhanced_nc_loss(z.view(), &ws, 0.5).unwrap().loss, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn injected_two_node_weights() {
        let z = array![[1.0, 0.0], [0.6, 0.8]];
        let ws = WeightSet {
            positive: array![[0.0, 2.0], [2.0, 0.0]],
            negative: array![[0.0, 1.0], [1.0, 0.0]],
        };
        assert_abs_diff_eq!(enhanced_nc_loss(z.view(), &ws, 0.5).unwrap().loss, -(2f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn proportional_weights_match_nc_up_to_row_scale() {
        let n = 7;
        let a = NormalizedAdjacency::new(&path(n), true).dense_power(2);
        let z = unit_rows(n, 3, 3);
        let batch: Vec<usize> = (0..n).collect();
        let nc = nc_loss(z.view(), &batch, a.view(), 0.5).unwrap();
        // w⁺_i(j) = Â^r[i,j] / mean_{j≠i} Â^r[i,j], w⁻ ≡ 1.
        let mut pos = a.clone();
        let mut shift = 0.0;
        for i in 0..n {
            pos[[i, i]] = 0.0;
            let mean = pos.row(i).sum() / (n - 1) as f64;
            pos.row_mut(i).mapv_inplace(|v| v / mean);
            shift += mean.ln();
        }
        let mut neg = Array2::ones((n, n));
        neg.diag_mut().fill(0.0);
        let enh = enhanced_nc_loss(z.view(), &WeightSet { positive: pos, negative: neg }, 0.5).unwrap();
        assert_abs_diff_eq!(enh.loss - shift / n as f64, nc.loss, epsilon = 1e-12);
    }

    #[test]
    fn anchorwise_agrees_with_per_anchor_form() {
        let n = 6;
        let z = unit_rows(n, 3, 4);
        let ws = WeightSet {
            positive: Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 1.0 + ((i + 2 * j) % 3) as f64 }),
            negative: Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 0.5 + ((i * j) % 4) as f64 / 2.0 }),
        };
        let batched = enhanced_nc_loss(z.view(), &ws, 0.4).unwrap();
        let mut total = 0.0;
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let wp: Vec<f64> = others.iter().map(|&j| ws.positive[[i, j]]).collect();
            let wn: Vec<f64> = others.iter().map(|&j| ws.negative[[i, j]]).collect();
            let num: f64 = others.iter().zip(&wp).map(|(&j, w)| w * (z.row(i).dot(&z.row(j)) / 0.4).exp()).sum();
            let den: f64 = others.iter().zip(&wn).map(|(&j, w)| w * (z.row(i).dot(&z.row(j)) / 0.4).exp()).sum();
            total += -(num / den).ln();
        }
        assert_abs_diff_eq!(batched.loss, total / n as f64, epsilon = 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let n = 12;
        let a = NormalizedAdjacency::new(&path(n), true).dense_power(2);
        // Node 10 has no batch node within two hops, so it is skipped.
        let batch = [0, 1, 2, 6, 10];
        let z = unit_rows(batch.len(), 4, 5);
        let report = grad_check_matrix(
            |m| {
                let r = nc_loss(m.view(), &batch, a.view(), 0.5).unwrap();
                assert!(r.skipped > 0);
                (r.loss, r.grad)
            },
            &z,
            1e-5,
            200,
            1,
        );
        assert!(report.max_rel_error <= 1e-4, "{report:?}");

        let z = unit_rows(n, 4, 6);
        let ws = WeightSet {
            positive: Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { ((i + j) % 3) as f64 * 0.7 }),
            negative: Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 0.3 + ((i * j) % 5) as f64 * 0.4 }),
        };
        let report = grad_check_matrix(
            |m| {
                let r = enhanced_nc_loss(m.view(), &ws, 0.5).unwrap();
                (r.loss, r.grad)
            },
            &z,
            1e-5,
            200,
            2,
        );
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }
}
