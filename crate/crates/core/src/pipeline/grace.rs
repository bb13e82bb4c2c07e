use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use super::config::{ExperimentConfig, Model, Variant};
use super::report::{EpochRecord, RunReport};
use crate::augment::make_views;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fingerprint;
use crate::graph::{LabelVector, NormalizedAdjacency};
use crate::nn::{gcn_backward, gcn_forward, init_gcn, optimizer_step, AdamConfig, GcnDims, ParamStore};
use crate::objectives::{two_view_loss, TwoViewWeights};
use crate::rng;
use crate::similarity::{compute_similarity, SimilarityMatrix};
use crate::weighting::WeightSet;

/// Trained encoder and its frozen output on the unperturbed graph.
#[derive(Debug, Clone)]
pub struct GraceOutput {
    /// Encoder output `H` (not the projection) for every node.
    pub embeddings: Array2<f64>,
    pub params: ParamStore,
    /// Accuracy fields are left empty; see [`super::run_experiment`].
    pub report: RunReport,
}

/// Builds the two-view weights of one batch. `sims` is the similarity of
/// the original data restricted to the batch.
pub(crate) fn two_view_weights(
    variant: Variant,
    sims: Option<&SimilarityMatrix>,
    labels: &LabelVector,
    batch: &[usize],
    cfg: &ExperimentConfig,
) -> Result<(TwoViewWeights, Option<WeightSet>)> {
    let intra = cfg.intra_view_negatives;
    if variant == Variant::IdealOracle {
        let y = LabelVector::with_classes(batch.iter().map(|&i| labels.get(i)).collect(), labels.num_classes())?;
        return Ok((TwoViewWeights::label_oracle(&y, intra), None));
    }
    let Some(sims) = sims.filter(|_| variant.uses_weights()) else {
        return Ok((TwoViewWeights::baseline(batch.len(), intra), None));
    };
    let ws = WeightSet::full(sims, cfg.temperatures)?;
    let w = match variant {
        Variant::EnhancedP => TwoViewWeights::positive_only(&ws, intra)?,
        Variant::EnhancedN => TwoViewWeights::negative_only(&ws, intra)?,
        _ => TwoViewWeights::enhanced(&ws, intra)?,
    };
    Ok((w, Some(ws)))
}

/// Node batches of one epoch: the whole node set when `batch_size` is 0 or
/// covers the graph, otherwise a seeded shuffle cut into chunks.
fn epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut nodes: Vec<usize> = (0..n).collect();
    if batch_size == 0 || batch_size >= n {
        return vec![nodes];
    }
    nodes.shuffle(&mut rng::stream(seed, "grace/batches", epoch as u64));
    nodes
        .chunks(batch_size)
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_unstable();
            c
        })
        .collect()
}

/// Two-view contrastive pretraining of the GCN encoder.
///
/// Every epoch draws two augmented views, encodes both and minimizes the
/// symmetric two-view loss on each batch. Importance weights come from the
/// similarity of the original graph and features, computed once.
pub fn train_grace(data: &Dataset, cfg: &ExperimentConfig) -> Result<GraceOutput> {
    cfg.validate()?;
    if cfg.model != Model::Grace {
        return Err(Error::Config("train_grace needs model grace".into()));
    }
    let start = Instant::now();
    let n = data.graph.node_count();
    if n < 2 {
        return Err(Error::Input("contrastive training needs at least two nodes".into()));
    }
    let dims = GcnDims { input: data.features.dim(), hidden: cfg.hidden_dim, projection: cfg.proj_dim };
    let mut params = init_gcn(dims, rng::derive_seed(cfg.seed, "init", 0));
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };

    let sims = if cfg.variant.uses_weights() {
        Some(compute_similarity(&data.graph, &data.features, &cfg.effective_similarity())?)
    } else {
        None
    };
    let full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
    let mut weight_evaluations = 0;
    let mut weights_fingerprint = None;
    let mut fixed: Option<TwoViewWeights> = None;
    let all: Vec<usize> = (0..n).collect();
    if full_batch {
        let (w, ws) = two_view_weights(cfg.variant, sims.as_ref(), &data.labels, &all, cfg)?;
        if let Some(ws) = ws {
            weight_evaluations += 1;
            weights_fingerprint = Some(fingerprint::to_hex(ws.fingerprint()));
        }
        fixed = Some(w);
    }

    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (c1, c2) = cfg.view_configs(epoch);
        let (v1, v2) = make_views(&data.graph, &data.features, &c1, &c2)?;
        let a1 = NormalizedAdjacency::new(&v1.graph, true);
        let a2 = NormalizedAdjacency::new(&v2.graph, true);
        let mut loss_sum = 0.0;
        let mut skipped = 0;
        let batches = epoch_batches(n, cfg.batch_size, cfg.seed, epoch);
        for batch in &batches {
            let (_, t1) = gcn_forward(&a1, v1.features.view(), &params)?;
            let (_, t2) = gcn_forward(&a2, v2.features.view(), &params)?;
            let local;
            let w = match &fixed {
                Some(w) => w,
                None => {
                    let restricted = sims.as_ref().map(|s| s.restrict(batch));
                    let (w, ws) = two_view_weights(cfg.variant, restricted.as_ref(), &data.labels, batch, cfg)?;
                    weight_evaluations += usize::from(ws.is_some());
                    local = w;
                    &local
                }
            };
            let (z1, z2) = if full_batch {
                (t1.z.clone(), t2.z.clone())
            } else {
                (t1.z.select(Axis(0), batch), t2.z.select(Axis(0), batch))
            };
            let out = two_view_loss(z1.view(), z2.view(), w, cfg.objective.tau)?;
            if !out.loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {} ({} skipped anchors); lower lr or raise tau",
                    epoch + 1,
                    out.skipped
                )));
            }
            let scatter = |g: Array2<f64>| {
                if full_batch {
                    return g;
                }
                let mut full = Array2::zeros(t1.z.raw_dim());
                for (row, &i) in batch.iter().enumerate() {
                    full.row_mut(i).assign(&g.row(row));
                }
                full
            };
            let (g1, g2) = (scatter(out.grad1), scatter(out.grad2));
            let mut grads = gcn_backward(&t1, &a1, g1.view(), None, &params);
            grads.add_assign(&gcn_backward(&t2, &a2, g2.view(), None, &params));
            optimizer_step(&mut params, &grads, &adam)?;
            loss_sum += out.loss;
            skipped += out.skipped;
        }
        let loss = loss_sum / batches.len() as f64;
        log::debug!("grace {} epoch {}: loss {loss:.6}", cfg.variant.name(), epoch + 1);
        epochs.push(EpochRecord { epoch: epoch + 1, loss, skipped, val_accuracy: None });
    }

    let a = NormalizedAdjacency::new(&data.graph, true);
    let (embeddings, _) = gcn_forward(&a, data.features.view(), &params)?;
    let report = RunReport {
        model: Model::Grace,
        variant: cfg.variant,
        seed: cfg.seed,
        config_hash: fingerprint::to_hex(cfg.hash()),
        epochs,
        val_accuracy: None,
        test_accuracy: None,
        weight_evaluations,
        weights_fingerprint,
        params_fingerprint: fingerprint::to_hex(params.fingerprint()),
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    Ok(GraceOutput { embeddings, params, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_sbm, SbmSpec};
    use crate::weighting::TemperaturePair;

    fn toy() -> Dataset {
        gen_sbm(&SbmSpec {
            block_sizes: vec![12, 12],
            p_in: 0.4,
            p_out: 0.05,
            feature_dim: 6,
            mean_norm: 1.0,
            noise: 0.5,
            seed: 3,
        })
        .unwrap()
    }

    fn cfg(variant: Variant, epochs: usize) -> ExperimentConfig {
        ExperimentConfig { variant, epochs, hidden_dim: 8, proj_dim: 8, ..Default::default() }
    }

    #[test]
    fn baseline_never_computes_weights() {
        let out = train_grace(&toy(), &cfg(Variant::Baseline, 2)).unwrap();
        assert_eq!(out.report.weight_evaluations, 0);
        assert!(out.report.weights_fingerprint.is_none());
        let out = train_grace(&toy(), &cfg(Variant::Enhanced, 2)).unwrap();
        assert_eq!(out.report.weight_evaluations, 1);
    }

    #[test]
    fn same_seed_same_report() {
        let a = train_grace(&toy(), &cfg(Variant::Enhanced, 3)).unwrap();
        let b = train_grace(&toy(), &cfg(Variant::Enhanced, 3)).unwrap();
        assert_eq!(a.report.fingerprint(), b.report.fingerprint());
        assert_eq!(a.embeddings, b.embeddings);
        let c = train_grace(&toy(), &cfg(Variant::Enhanced, 3).with_seed(1)).unwrap();
        assert_ne!(a.report.fingerprint(), c.report.fingerprint());
    }

    #[test]
    fn weights_do_not_depend_on_epoch_count() {
        let a = train_grace(&toy(), &cfg(Variant::Enhanced, 1)).unwrap();
        let b = train_grace(&toy(), &cfg(Variant::Enhanced, 4)).unwrap();
        assert_eq!(a.report.weights_fingerprint, b.report.weights_fingerprint);
    }

    #[test]
    fn zero_epochs_gives_initial_encoder() {
        let out = train_grace(&toy(), &cfg(Variant::Baseline, 0)).unwrap();
        assert!(out.report.epochs.is_empty());
        assert_eq!(out.embeddings.dim(), (24, 8));
        for row in out.embeddings.rows() {
            let norm = row.dot(&row).sqrt();
            assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn training_lowers_loss() {
        // Views are redrawn every epoch, so compare window means.
        let out = train_grace(&toy(), &ExperimentConfig { lr: 0.01, ..cfg(Variant::Baseline, 60) }).unwrap();
        let mean = |r: std::ops::Range<usize>| out.report.epochs[r].iter().map(|e| e.loss).sum::<f64>() / 10.0;
        assert!(mean(50..60) < mean(0..10), "{} vs {}", mean(50..60), mean(0..10));
    }

    #[test]
    fn batched_training_recomputes_weights_per_batch() {
        let c = ExperimentConfig { batch_size: 10, ..cfg(Variant::Enhanced, 2) };
        let out = train_grace(&toy(), &c).unwrap();
        assert_eq!(out.report.weight_evaluations, 2 * 3);
        assert!(out.report.epochs.iter().all(|e| e.loss.is_finite()));
    }

    #[test]
    fn every_variant_runs() {
        for v in Variant::ABLATION.into_iter().chain([Variant::IdealOracle]) {
            let out = train_grace(&toy(), &cfg(v, 1)).unwrap();
            assert!(out.report.epochs[0].loss.is_finite(), "{}", v.name());
        }
    }

    #[test]
    fn limit_temperatures_track_baseline_up_to_offset() {
        // τp → 0 concentrates the positive weight on the most similar
        // candidate (the anchor itself under cosine-plus-PPR similarity),
        // scaled to the candidate count; τn → ∞ makes negatives uniform. The
        // only difference from the baseline is then a numerator factor n,
        // i.e. a loss offset of −ln n.
        let d = toy();
        let n = d.graph.node_count() as f64;
        let base = train_grace(&d, &cfg(Variant::Baseline, 1)).unwrap();
        let temps = TemperaturePair { tau_p: 1e-4, tau_n: 1e9 };
        let enh = train_grace(&d, &ExperimentConfig { temperatures: temps, ..cfg(Variant::Enhanced, 1) }).unwrap();
        let (lb, le) = (base.report.epochs[0].loss, enh.report.epochs[0].loss);
        assert!(((le + n.ln()) - lb).abs() <= 0.02 * lb, "{le} vs {lb}");
        let neg = train_grace(&d, &ExperimentConfig { temperatures: temps, ..cfg(Variant::EnhancedN, 1) }).unwrap();
        assert!((neg.report.epochs[0].loss - lb).abs() <= 0.02 * lb);
    }
}
