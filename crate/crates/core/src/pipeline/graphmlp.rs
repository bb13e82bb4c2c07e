use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::IndexedRandom;

use super::config::{ExperimentConfig, Model, Variant};
use super::probe::{accuracy, predict};
use super::report::{EpochRecord, RunReport};
use crate::data::{DataSplit, Dataset};
use crate::error::{Error, Result};
use crate::fingerprint;
use crate::graph::NormalizedAdjacency;
use crate::nn::{init_mlp, mlp_backward, mlp_forward, optimizer_step, AdamConfig, MlpDims, ParamStore};
use crate::objectives::{combined_loss, cross_entropy, neighborhood_loss};
use crate::rng;
use crate::similarity::{compute_similarity, SimilarityMatrix};
use crate::weighting::WeightSet;

#[derive(Debug, Clone)]
pub struct GraphMlpOutput {
    /// Normalized MLP embeddings of every node under the kept parameters.
    pub embeddings: Array2<f64>,
    pub predictions: Vec<usize>,
    /// Parameters with the best validation accuracy (latest on ties).
    pub params: ParamStore,
    pub report: RunReport,
}

/// Numerator and denominator weights of the neighborhood loss on a batch.
struct NcTerms {
    num: Array2<f64>,
    den: Array2<f64>,
}

fn nc_terms(
    variant: Variant,
    sims: Option<&SimilarityMatrix>,
    a_hat_r: ArrayView2<'_, f64>,
    batch: &[usize],
    cfg: &ExperimentConfig,
) -> Result<(NcTerms, Option<WeightSet>)> {
    let b = batch.len();
    let hops = || Array2::from_shape_fn((b, b), |(i, j)| a_hat_r[[batch[i], batch[j]]]);
    let Some(sims) = sims.filter(|_| variant.uses_weights()) else {
        return Ok((NcTerms { num: hops(), den: Array2::ones((b, b)) }, None));
    };
    let ws = WeightSet::excluding_self(&sims.restrict(batch), cfg.temperatures)?;
    let terms = match variant {
        Variant::EnhancedP => NcTerms { num: ws.positive.clone(), den: Array2::ones((b, b)) },
        Variant::EnhancedN => NcTerms { num: hops(), den: ws.negative.clone() },
        _ => NcTerms { num: ws.positive.clone(), den: ws.negative.clone() },
    };
    Ok((terms, Some(ws)))
}

/// Batch of one step: every train node plus a uniform sample of the rest
/// up to `batch_size` nodes; all nodes when `batch_size` is 0.
fn sample_batch(n: usize, train: &[usize], batch_size: usize, seed: u64, step: usize) -> Vec<usize> {
    if batch_size == 0 || batch_size >= n {
        return (0..n).collect();
    }
    let mut is_train = vec![false; n];
    for &i in train {
        is_train[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !is_train[i]).collect();
    let extra = batch_size.saturating_sub(train.len()).min(rest.len());
    let mut r = rng::stream(seed, "graphmlp/batches", step as u64);
    let mut batch: Vec<usize> = train.to_vec();
    batch.extend(rest.choose_multiple(&mut r, extra).copied());
    batch.sort_unstable();
    batch
}

/// Semi-supervised MLP training with cross-entropy on the labeled nodes
/// plus `λ_nc` times a neighborhood contrastive loss on each batch. One
/// epoch is one step. The parameters with the best validation accuracy are
/// kept, and inference uses the MLP alone.
pub fn train_graphmlp(data: &Dataset, split: &DataSplit, cfg: &ExperimentConfig) -> Result<GraphMlpOutput> {
    cfg.validate()?;
    if cfg.model != Model::Graphmlp {
        return Err(Error::Config("train_graphmlp needs model graphmlp".into()));
    }
    if split.train.is_empty() {
        return Err(Error::Input("graph-mlp training needs labeled train nodes".into()));
    }
    let start = Instant::now();
    let n = data.graph.node_count();
    let labels = data.labels.as_slice();
    let x = data.features.view();
    let dims = MlpDims {
        input: data.features.dim(),
        hidden: cfg.hidden_dim,
        embedding: cfg.proj_dim,
        classes: data.labels.num_classes(),
    };
    let mut params = init_mlp(dims, rng::derive_seed(cfg.seed, "init", 0));
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
    let a_hat_r = NormalizedAdjacency::new(&data.graph, true).dense_power(cfg.objective.nc_r);
    let sims = if cfg.variant.uses_weights() {
        Some(compute_similarity(&data.graph, &data.features, &cfg.effective_similarity())?)
    } else {
        None
    };

    let full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
    let mut weight_evaluations = 0;
    let mut weights_fingerprint = None;
    let mut fixed = None;
    if full_batch {
        let all: Vec<usize> = (0..n).collect();
        let (terms, ws) = nc_terms(cfg.variant, sims.as_ref(), a_hat_r.view(), &all, cfg)?;
        if let Some(ws) = ws {
            weight_evaluations += 1;
            weights_fingerprint = Some(fingerprint::to_hex(ws.fingerprint()));
        }
        fixed = Some(terms);
    }

    let val_accuracy = |p: &ParamStore| -> Result<f64> {
        let (_, trace) = mlp_forward(x, p)?;
        Ok(accuracy(&predict(trace.logits.view()), &data.labels, &split.val))
    };
    let mut is_train = vec![false; n];
    for &i in &split.train {
        is_train[i] = true;
    }
    let mut best = (val_accuracy(&params)?, params.clone());
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let batch = sample_batch(n, &split.train, cfg.batch_size, cfg.seed, epoch);
        let local;
        let terms = match &fixed {
            Some(t) => t,
            None => {
                let (t, ws) = nc_terms(cfg.variant, sims.as_ref(), a_hat_r.view(), &batch, cfg)?;
                weight_evaluations += usize::from(ws.is_some());
                local = t;
                &local
            }
        };
        let xb = if full_batch { x.to_owned() } else { x.select(Axis(0), &batch) };
        let (z, trace) = mlp_forward(xb.view(), &params)?;
        let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
        let labeled: Vec<usize> = (0..batch.len()).filter(|&r| is_train[batch[r]]).collect();
        let ce = cross_entropy(trace.logits.view(), &yb, &labeled)?;
        let nc = neighborhood_loss(z.view(), terms.num.view(), terms.den.view(), cfg.objective.tau)?;
        let total = combined_loss(ce, &nc, cfg.objective.lambda_nc)?;
        if !total.loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss at epoch {} (nc {}, {} skipped anchors); lower lr or raise tau",
                epoch + 1,
                nc.loss,
                nc.skipped
            )));
        }
        let grads = mlp_backward(
            &trace,
            Some(total.grad_embedding.view()),
            Some(total.grad_logits.view()),
            &params,
        );
        optimizer_step(&mut params, &grads, &adam)?;
        let acc = val_accuracy(&params)?;
        if acc >= best.0 {
            best = (acc, params.clone());
        }
        log::debug!("graphmlp {} epoch {}: loss {:.6} val {acc:.4}", cfg.variant.name(), epoch + 1, total.loss);
        epochs.push(EpochRecord { epoch: epoch + 1, loss: total.loss, skipped: nc.skipped, val_accuracy: Some(acc) });
    }

    let (val, kept) = best;
    let (embeddings, trace) = mlp_forward(x, &kept)?;
    let predictions = predict(trace.logits.view());
    let report = RunReport {
        model: Model::Graphmlp,
        variant: cfg.variant,
        seed: cfg.seed,
        config_hash: fingerprint::to_hex(cfg.hash()),
        epochs,
        val_accuracy: Some(val),
        test_accuracy: Some(accuracy(&predictions, &data.labels, &split.test)),
        weight_evaluations,
        weights_fingerprint,
        params_fingerprint: fingerprint::to_hex(kept.fingerprint()),
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    Ok(GraphMlpOutput { embeddings, predictions, params: kept, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_sbm, make_split, SbmSpec, SplitSpec};

    fn toy() -> (Dataset, DataSplit) {
        let d = gen_sbm(&SbmSpec {
            block_sizes: vec![15, 15],
            p_in: 0.3,
            p_out: 0.03,
            feature_dim: 6,
            mean_norm: 1.0,
            noise: 0.6,
            seed: 9,
        })
        .unwrap();
        let s = make_split(30, &SplitSpec::PerClass { per_class: 3, val: 0.2, test: 0.5 }, &d.labels, 1).unwrap();
        (d, s)
    }

    fn cfg(variant: Variant, epochs: usize) -> ExperimentConfig {
        ExperimentConfig {
            model: Model::Graphmlp,
            variant,
            epochs,
            hidden_dim: 8,
            proj_dim: 8,
            lr: 0.01,
            ..Default::default()
        }
    }

    #[test]
    fn batches_contain_train_nodes() {
        let b = sample_batch(20, &[3, 7], 6, 0, 0);
        assert_eq!(b.len(), 6);
        assert!(b.contains(&3) && b.contains(&7));
        assert_ne!(sample_batch(20, &[3, 7], 6, 0, 0), sample_batch(20, &[3, 7], 6, 0, 1));
        assert_eq!(sample_batch(5, &[0], 0, 0, 0), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn every_variant_runs_and_is_deterministic() {
        let (d, s) = toy();
        for v in Variant::ABLATION {
            let a = train_graphmlp(&d, &s, &cfg(v, 5)).unwrap();
            let b = train_graphmlp(&d, &s, &cfg(v, 5)).unwrap();
            assert_eq!(a.report.fingerprint(), b.report.fingerprint(), "{}", v.name());
            assert_eq!(a.report.weight_evaluations, usize::from(v.uses_weights()));
        }
    }

    #[test]
    fn oracle_variant_rejected() {
        let (d, s) = toy();
        assert!(train_graphmlp(&d, &s, &cfg(Variant::IdealOracle, 1)).is_err());
    }

    #[test]
    fn batched_mode_recomputes_weights() {
        let (d, s) = toy();
        let c = ExperimentConfig { batch_size: 12, ..cfg(Variant::Enhanced, 4) };
        let out = train_graphmlp(&d, &s, &c).unwrap();
        assert_eq!(out.report.weight_evaluations, 4);
    }

    #[test]
    fn zero_lambda_matches_plain_classifier() {
        // With λ = 0 the neighborhood term contributes nothing, so every
        // variant trains the same classifier.
        let (d, s) = toy();
        let mut c = cfg(Variant::Baseline, 20);
        c.objective.lambda_nc = 0.0;
        let a = train_graphmlp(&d, &s, &c).unwrap();
        let b = train_graphmlp(&d, &s, &c.with_variant(Variant::Enhanced)).unwrap();
        assert_eq!(a.params.fingerprint(), b.params.fingerprint());
    }

    #[test]
    fn learns_separable_blocks() {
        let (d, s) = toy();
        let out = train_graphmlp(&d, &s, &cfg(Variant::Enhanced, 100)).unwrap();
        assert!(out.report.test_accuracy.unwrap() > 0.7, "{:?}", out.report.test_accuracy);
    }
}
