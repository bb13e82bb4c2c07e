//! Small dense networks with hand-written reverse-mode gradients.
//!
//! The GCN encoder computes `H = rownorm(Â·relu(Â·X·W1)·W2)` and the
//! projector `Z = rownorm(relu(H·U1)·U2)`. The MLP used for semi-supervised
//! training computes `Z = rownorm(relu(X·W1)·W2)` plus class logits from the
//! un-normalized `relu(X·W1)·W2`.

mod gcn;
mod gradcheck;
mod mlp;
mod ops;
mod params;

pub use gcn::{gcn_backward, gcn_forward, init_gcn, GcnDims, GcnTrace};
pub use gradcheck::{grad_check, grad_check_matrix, relative_error, GradCheckReport};
pub use mlp::{init_mlp, mlp_backward, mlp_forward, MlpDims, MlpTrace};
pub use ops::{relu, relu_backward, row_normalize, row_normalize_backward};
pub use params::{optimizer_step, AdamConfig, Gradients, Param, ParamStore};
