use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Model, Variant};
use crate::error::{Error, Result};
use crate::fingerprint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// Anchors skipped for an empty numerator.
    pub skipped: usize,
    /// Validation accuracy, when the model is evaluated during training.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: Model,
    pub variant: Variant,
    pub seed: u64,
    /// Hex hash of the full experiment config.
    pub config_hash: String,
    pub epochs: Vec<EpochRecord>,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// How many times importance weights were computed.
    pub weight_evaluations: usize,
    pub weights_fingerprint: Option<String>,
    pub params_fingerprint: String,
    pub wall_clock_secs: f64,
}

impl RunReport {
    /// Hash of everything except wall-clock time.
    pub fn fingerprint(&self) -> u64 {
        let stable = RunReport { wall_clock_secs: 0.0, ..self.clone() };
        fingerprint::config_hash(&stable)
    }

    /// One JSON object per epoch followed by a summary object.
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Tagged<'a, T: Serialize> {
            record: &'static str,
            #[serde(flatten)]
            body: &'a T,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            model: Model,
            variant: Variant,
            seed: u64,
            config_hash: &'a str,
            epochs: usize,
            final_loss: Option<f64>,
            val_accuracy: Option<f64>,
            test_accuracy: Option<f64>,
            weight_evaluations: usize,
            weights_fingerprint: &'a Option<String>,
            params_fingerprint: &'a str,
            report_fingerprint: String,
            wall_clock_secs: f64,
        }
        let mut out = String::new();
        for e in &self.epochs {
            let line = serde_json::to_string(&Tagged { record: "epoch", body: e }).expect("serializable");
            writeln!(out, "{line}").unwrap();
        }
        let summary = Summary {
            model: self.model,
            variant: self.variant,
            seed: self.seed,
            config_hash: &self.config_hash,
            epochs: self.epochs.len(),
            final_loss: self.epochs.last().map(|e| e.loss),
            val_accuracy: self.val_accuracy,
            test_accuracy: self.test_accuracy,
            weight_evaluations: self.weight_evaluations,
            weights_fingerprint: &self.weights_fingerprint,
            params_fingerprint: &self.params_fingerprint,
            report_fingerprint: fingerprint::to_hex(self.fingerprint()),
            wall_clock_secs: self.wall_clock_secs,
        };
        let line = serde_json::to_string(&Tagged { record: "summary", body: &summary }).expect("serializable");
        writeln!(out, "{line}").unwrap();
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }
}

/// Mean and standard deviation (population, `ddof = 0`) of one variant's
/// accuracies across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub mean_acc: f64,
    pub std_acc: f64,
    pub accuracies: Vec<f64>,
    pub reports: Vec<RunReport>,
}

impl AblationRow {
    pub fn new(variant: Variant, reports: Vec<RunReport>) -> Self {
        let accuracies: Vec<f64> = reports.iter().map(|r| r.test_accuracy.unwrap_or(f64::NAN)).collect();
        let (mean_acc, std_acc) = mean_std(&accuracies);
        AblationRow { variant, mean_acc, std_acc, accuracies, reports }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `variant,mean_acc,std_acc,seeds` after a `# config_hash=` comment line.
pub fn ablation_csv(rows: &[AblationRow], config_hash: u64) -> String {
    let mut out = format!("# config_hash={}\nvariant,mean_acc,std_acc,seeds\n", fingerprint::to_hex(config_hash));
    for r in rows {
        writeln!(out, "{},{:.6},{:.6},{}", r.variant.name(), r.mean_acc, r.std_acc, r.accuracies.len()).unwrap();
    }
    out
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow], config_hash: u64) -> Result<()> {
    fs::write(path, ablation_csv(rows, config_hash)).map_err(|e| Error::io(path, e))
}
