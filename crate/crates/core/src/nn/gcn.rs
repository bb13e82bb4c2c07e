use ndarray::{Array2, ArrayView2};

use super::ops::{relu, relu_backward, row_normalize, row_normalize_backward};
use super::params::{Gradients, ParamStore};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnDims {
    pub input: usize,
    /// Encoder width `d1`.
    pub hidden: usize,
    /// Projector width `d2`.
    pub projection: usize,
}

/// `W1: input×hidden`, `W2: hidden×hidden`, `U1: hidden×projection`,
/// `U2: projection×projection`.
pub fn init_gcn(dims: GcnDims, seed: u64) -> ParamStore {
    let mut r = rng::stream(seed, "init/gcn", 0);
    let mut store = ParamStore::new();
    store.add_glorot("W1", dims.input, dims.hidden, &mut r);
    store.add_glorot("W2", dims.hidden, dims.hidden, &mut r);
    store.add_glorot("U1", dims.hidden, dims.projection, &mut r);
    store.add_glorot("U2", dims.projection, dims.projection, &mut r);
    store
}

/// Activations cached by [`gcn_forward`].
#[derive(Debug, Clone)]
pub struct GcnTrace {
    /// `Â·X`
    pub ax: Array2<f64>,
    pub pre1: Array2<f64>,
    /// `Â·relu(Â·X·W1)`
    pub ah1: Array2<f64>,
    /// Encoder output, row-normalized.
    pub h: Array2<f64>,
    pub h_norms: Vec<f64>,
    pub q1: Array2<f64>,
    pub r1: Array2<f64>,
    /// Projector output, row-normalized.
    pub z: Array2<f64>,
    pub z_norms: Vec<f64>,
}

fn ensure_finite(m: &Array2<f64>, stage: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "non-finite activation in {stage}; the learning rate is likely too high"
        )))
    }
}

/// Returns the encoder embeddings `H` and the trace (which also holds the
/// projections `Z`).
pub fn gcn_forward(
    a_hat: &NormalizedAdjacency,
    x: ArrayView2<'_, f64>,
    params: &ParamStore,
) -> Result<(Array2<f64>, GcnTrace)> {
    let (w1, w2, u1, u2) = (params.get("W1"), params.get("W2"), params.get("U1"), params.get("U2"));
    if x.ncols() != w1.nrows() {
        return Err(Error::Input(format!(
            "feature dimension {} does not match W1 with {} rows",
            x.ncols(),
            w1.nrows()
        )));
    }
    let ax = a_hat.spmm(x)?;
    let pre1 = ax.dot(w1);
    let h1 = relu(&pre1);
    let ah1 = a_hat.spmm(h1.view())?;
    let h2 = ah1.dot(w2);
    ensure_finite(&h2, "encoder")?;
    let (h, h_norms) = row_normalize(&h2);
    let q1 = h.dot(u1);
    let r1 = relu(&q1);
    let z2 = r1.dot(u2);
    ensure_finite(&z2, "projector")?;
    let (z, z_norms) = row_normalize(&z2);
    let trace = GcnTrace {
        ax,
        pre1,
        ah1,
        h: h.clone(),
        h_norms,
        q1,
        r1,
        z,
        z_norms,
    };
    Ok((h, trace))
}

/// Gradients of all four parameters given upstream gradients with respect
/// to the projections `Z` and, optionally, the encoder output `H`.
pub fn gcn_backward(
    trace: &GcnTrace,
    a_hat: &NormalizedAdjacency,
    grad_z: ArrayView2<'_, f64>,
    grad_h: Option<ArrayView2<'_, f64>>,
    params: &ParamStore,
) -> Gradients {
    let (w2, u1, u2) = (params.get("W2"), params.get("U1"), params.get("U2"));
    let mut grads = params.zero_grads();

    let d_z2 = row_normalize_backward(&trace.z, &trace.z_norms, grad_z);
    let d_u2 = trace.r1.t().dot(&d_z2);
    let d_r1 = d_z2.dot(&u2.t());
    let d_q1 = relu_backward(&trace.q1, d_r1.view());
    let d_u1 = trace.h.t().dot(&d_q1);
    let mut d_h = d_q1.dot(&u1.t());
    if let Some(g) = grad_h {
        d_h += &g;
    }

    let d_h2 = row_normalize_backward(&trace.h, &trace.h_norms, d_h.view());
    let d_w2 = trace.ah1.t().dot(&d_h2);
    let d_ah1 = d_h2.dot(&w2.t());
    // Â is symmetric, so Âᵀ·G = Â·G.
    let d_h1 = a_hat.spmm(d_ah1.view()).expect("shapes fixed by forward");
    let d_pre1 = relu_backward(&trace.pre1, d_h1.view());
    let d_w1 = trace.ax.t().dot(&d_pre1);

    for (name, g) in [("W1", d_w1), ("W2", d_w2), ("U1", d_u1), ("U2", d_u2)] {
        grads.0[params.index_of(name).expect("gcn parameter")] = g;
    }
    grads
}
