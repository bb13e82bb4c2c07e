//! Training and evaluation pipelines.
//!
//! GRACE-style runs pretrain a GCN with the two-view contrastive loss and
//! score the frozen encoder with a linear probe. Graph-MLP runs train an MLP
//! with cross-entropy plus a neighborhood contrastive loss. Both support the
//! baseline, the similarity-weighted variants and the ablation grid.

mod config;
mod grace;
mod graphmlp;
mod probe;
mod report;

use ndarray::Array2;

use crate::data::{make_split, DataSplit, Dataset};
use crate::error::{Error, Result};
use crate::nn::ParamStore;

pub use config::{ExperimentConfig, Model, ProbeConfig, Variant, ViewRates};
pub use grace::{train_grace, GraceOutput};
pub use graphmlp::{train_graphmlp, GraphMlpOutput};
pub use probe::{accuracy, linear_probe, predict, ProbeResult};
pub use report::{ablation_csv, mean_std, write_ablation_csv, AblationRow, EpochRecord, RunReport};

/// Result of one complete run: embeddings, parameters and a report with
/// accuracies filled in.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub embeddings: Array2<f64>,
    pub params: ParamStore,
    pub split: DataSplit,
    pub report: RunReport,
}

/// Split seed of a run. It depends on the run seed only, so every variant
/// of one seed sees the same split.
pub fn split_for(data: &Dataset, cfg: &ExperimentConfig) -> Result<DataSplit> {
    make_split(data.graph.node_count(), &cfg.split, &data.labels, cfg.seed)
}

/// Trains the configured model and evaluates it on a fresh split.
pub fn run_experiment(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let split = split_for(data, cfg)?;
    match cfg.model {
        Model::Grace => {
            let out = train_grace(data, cfg)?;
            let probe = linear_probe(out.embeddings.view(), &data.labels, &split, &cfg.probe)?;
            let mut report = out.report;
            report.val_accuracy = Some(probe.val_accuracy);
            report.test_accuracy = Some(probe.test_accuracy);
            Ok(ExperimentOutput { embeddings: out.embeddings, params: out.params, split, report })
        }
        Model::Graphmlp => {
            let out = train_graphmlp(data, &split, cfg)?;
            Ok(ExperimentOutput { embeddings: out.embeddings, params: out.params, split, report: out.report })
        }
    }
}

/// Runs the six ablation variants over every seed.
pub fn run_ablation(data: &Dataset, base: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<AblationRow>> {
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    Variant::ABLATION
        .iter()
        .map(|&variant| {
            let reports = seeds
                .iter()
                .map(|&seed| {
                    let cfg = base.with_variant(variant).with_seed(seed);
                    log::info!("ablation: {} seed {seed}", variant.name());
                    run_experiment(data, &cfg).map(|o| o.report)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AblationRow::new(variant, reports))
        })
        .collect()
}
