use ndarray::{Array2, ArrayView2};

use super::ops::{relu, relu_backward, row_normalize, row_normalize_backward};
use super::params::{Gradients, ParamStore};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpDims {
    pub input: usize,
    pub hidden: usize,
    /// Width of the embedding used by the neighborhood loss.
    pub embedding: usize,
    pub classes: usize,
}

/// `W1: input×hidden`, `W2: hidden×embedding`, `C: embedding×classes`.
pub fn init_mlp(dims: MlpDims, seed: u64) -> ParamStore {
    let mut r = rng::stream(seed, "init/mlp", 0);
    let mut store = ParamStore::new();
    store.add_glorot("W1", dims.input, dims.hidden, &mut r);
    store.add_glorot("W2", dims.hidden, dims.embedding, &mut r);
    store.add_glorot("C", dims.embedding, dims.classes, &mut r);
    store
}

#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub x: Array2<f64>,
    pub pre1: Array2<f64>,
    pub h1: Array2<f64>,
    /// Un-normalized embedding `relu(X·W1)·W2`.
    pub raw: Array2<f64>,
    /// Row-normalized embedding.
    pub z: Array2<f64>,
    pub z_norms: Vec<f64>,
    pub logits: Array2<f64>,
}

/// Returns the normalized embeddings and the trace (which also holds the
/// class logits).
pub fn mlp_forward(x: ArrayView2<'_, f64>, params: &ParamStore) -> Result<(Array2<f64>, MlpTrace)> {
    let (w1, w2, c) = (params.get("W1"), params.get("W2"), params.get("C"));
    if x.ncols() != w1.nrows() {
        return Err(Error::Input(format!(
            "feature dimension {} does not match W1 with {} rows",
            x.ncols(),
            w1.nrows()
        )));
    }
    let pre1 = x.dot(w1);
    let h1 = relu(&pre1);
    let raw = h1.dot(w2);
    let logits = raw.dot(c);
    if raw.iter().chain(logits.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "non-finite activation in MLP; the learning rate is likely too high".into(),
        ));
    }
    let (z, z_norms) = row_normalize(&raw);
    let trace = MlpTrace {
        x: x.to_owned(),
        pre1,
        h1,
        raw,
        z: z.clone(),
        z_norms,
        logits,
    };
    Ok((z, trace))
}

/// Gradients given upstream gradients for the normalized embeddings and/or
/// the logits.
pub fn mlp_backward(
    trace: &MlpTrace,
    grad_z: Option<ArrayView2<'_, f64>>,
    grad_logits: Option<ArrayView2<'_, f64>>,
    params: &ParamStore,
) -> Gradients {
    let (w2, c) = (params.get("W2"), params.get("C"));
    let mut d_raw = match grad_z {
        Some(g) => row_normalize_backward(&trace.z, &trace.z_norms, g),
        None => Array2::zeros(trace.raw.raw_dim()),
    };
    let d_c = match grad_logits {
        Some(g) => {
            d_raw += &g.dot(&c.t());
            trace.raw.t().dot(&g)
        }
        None => Array2::zeros(c.raw_dim()),
    };
    let d_w2 = trace.h1.t().dot(&d_raw);
    let d_h1 = d_raw.dot(&w2.t());
    let d_pre1 = relu_backward(&trace.pre1, d_h1.view());
    let d_w1 = trace.x.t().dot(&d_pre1);

    let mut grads = params.zero_grads();
    for (name, g) in [("W1", d_w1), ("W2", d_w2), ("C", d_c)] {
        grads.0[params.index_of(name).expect("mlp parameter")] = g;
    }
    grads
}
