use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::config::ProbeConfig;
use crate::data::DataSplit;
use crate::error::{Error, Result};
use crate::graph::LabelVector;
use crate::nn::{optimizer_step, AdamConfig, Gradients, ParamStore};
use crate::objectives::cross_entropy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Iteration whose parameters were kept.
    pub best_iteration: usize,
}

/// Row-wise argmax (first maximum wins).
pub fn predict(logits: ArrayView2<'_, f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Fraction of `idx` whose prediction matches the label; 0 for an empty set.
pub fn accuracy(pred: &[usize], labels: &LabelVector, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    idx.iter().filter(|&&i| pred[i] == labels.get(i)).count() as f64 / idx.len() as f64
}

fn logits(x: ArrayView2<'_, f64>, p: &ParamStore) -> Array2<f64> {
    x.dot(p.get("W")) + p.get("b")
}

/// Multinomial logistic regression on frozen embeddings, trained full-batch
/// on the train split with an ℓ2 penalty. The parameters with the best
/// validation accuracy are kept and scored on the test split.
pub fn linear_probe(
    emb: ArrayView2<'_, f64>,
    labels: &LabelVector,
    split: &DataSplit,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    let n = emb.nrows();
    if labels.len() != n {
        return Err(Error::Input(format!("{} labels for {n} embeddings", labels.len())));
    }
    if split.train.is_empty() {
        return Err(Error::Input("linear probe needs a nonempty train split".into()));
    }
    let classes = labels.num_classes();
    let mut present = vec![false; classes];
    for &i in &split.train {
        present[labels.get(i)] = true;
    }
    if let Some(c) = present.iter().position(|&p| !p) {
        return Err(Error::Input(format!("class {c} has no node in the train split")));
    }

    let mut params = ParamStore::new();
    params.add("W", Array2::zeros((emb.ncols(), classes)));
    params.add("b", Array2::zeros((1, classes)));
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
    let y = labels.as_slice();

    let val_acc = |p: &ParamStore| accuracy(&predict(logits(emb, p).view()), labels, &split.val);
    let mut best = (val_acc(&params), 0, params.clone());
    for it in 1..=cfg.iterations {
        let (_, g_logits) = cross_entropy(logits(emb, &params).view(), y, &split.train)?;
        let g_w = emb.t().dot(&g_logits) + params.get("W") * cfg.weight_decay;
        let g_b = g_logits.sum_axis(Axis(0)).insert_axis(Axis(0));
        optimizer_step(&mut params, &Gradients(vec![g_w, g_b]), &adam)?;
        if it % cfg.eval_every == 0 || it == cfg.iterations {
            let acc = val_acc(&params);
            if acc >= best.0 {
                best = (acc, it, params.clone());
            }
        }
    }
    let (val_accuracy, best_iteration, kept) = best;
    let pred = predict(logits(emb, &kept).view());
    Ok(ProbeResult {
        val_accuracy,
        test_accuracy: accuracy(&pred, labels, &split.test),
        best_iteration,
    })
}
