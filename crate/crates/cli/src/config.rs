//! JSON configuration shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use gcl_core::data::{gen_sbm, load_dataset, Dataset, DatasetPaths, SbmSpec};
use gcl_core::pipeline::ExperimentConfig;
use gcl_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Where the dataset comes from. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Edge list, one `u<TAB>v` pair per line.
    pub edges: PathBuf,
    /// Comma-separated feature rows.
    pub features: PathBuf,
    /// One integer label per line.
    pub labels: PathBuf,
    /// Generate a block-model dataset in memory instead of reading files.
    pub sbm: Option<SbmSpec>,
}

impl Default for DataConfig {
    fn default() -> Self {
        let paths = DatasetPaths::in_dir(Path::new("data"));
        DataConfig { edges: paths.edges, features: paths.features, labels: paths.labels, sbm: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub data: DataConfig,
    pub experiment: ExperimentConfig,
    /// Directory for every output file; created if missing.
    pub output_dir: PathBuf,
    /// Seeds of the ablation grid.
    pub seeds: Vec<u64>,
    /// Embeddings scored by `probe`; defaults to the file `train` writes for
    /// this config.
    pub embeddings: Option<PathBuf>,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            data: DataConfig::default(),
            experiment: ExperimentConfig::default(),
            output_dir: PathBuf::from("out"),
            seeds: vec![0, 1, 2],
            embeddings: None,
        }
    }
}

/// Parses JSON with the failing field path in the error message.
pub fn parse_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::Config(format!("{}: at `{field}`: {}", path.display(), e.inner()))
    })
}

impl CliConfig {
    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: CliConfig = parse_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data.edges, &mut cfg.data.features, &mut cfg.data.labels, &mut cfg.output_dir] {
            *p = base.join(&*p);
        }
        if let Some(e) = &mut cfg.embeddings {
            *e = base.join(&*e);
        }
        cfg.experiment.validate()?;
        if let Some(spec) = &cfg.data.sbm {
            spec.validate()?;
        }
        Ok(cfg)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        match &self.data.sbm {
            Some(spec) => gen_sbm(spec),
            None => load_dataset(&DatasetPaths {
                edges: self.data.edges.clone(),
                features: self.data.features.clone(),
                labels: self.data.labels.clone(),
            }),
        }
    }

    /// File stem for one run's outputs, e.g. `grace-enhanced-s0`.
    pub fn run_stem(&self) -> String {
        let e = &self.experiment;
        let model = serde_json::to_value(e.model).expect("model serializes");
        format!("{}-{}-s{}", model.as_str().unwrap_or("model"), e.variant.name(), e.seed)
    }

    pub fn output(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.output_dir).map_err(|e| Error::Io {
            path: self.output_dir.clone(),
            source: e,
        })?;
        Ok(self.output_dir.join(name))
    }
}
