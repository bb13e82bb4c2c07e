//! `gcl`: similarity, training, probing, ablation and synthetic data from a
//! single JSON config.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! numerical failures during training.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gcl_core::data::{gen_sbm, read_embeddings, save_dataset, write_embeddings, DatasetPaths, SbmSpec};
use gcl_core::fingerprint::{config_hash, to_hex};
use gcl_core::pipeline::{linear_probe, run_ablation, run_experiment, split_for, write_ablation_csv};
use gcl_core::similarity::{cache, compute_similarity};
use gcl_core::{Error, Result};
use serde::Serialize;

use config::{parse_json, CliConfig};

#[derive(Parser)]
#[command(name = "gcl", version, about = "Similarity-weighted graph contrastive learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the fused similarity matrix and write the binary cache.
    Sim {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Train the configured model; writes embeddings, a JSONL report and a
    /// checkpoint.
    Train {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Score an embeddings file with the linear probe.
    Probe {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run the six-variant ablation grid over the configured seeds.
    Ablate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Write a block-model dataset (edges.tsv, features.csv, labels.txt).
    Synth {
        /// JSON block-model spec.
        #[arg(short, long)]
        spec: PathBuf,
        /// Output directory, created if missing.
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn cmd_sim(path: &Path) -> Result<()> {
    let cfg = CliConfig::load(path)?;
    let data = cfg.dataset()?;
    let sim_cfg = cfg.experiment.effective_similarity();
    let hash = config_hash(&(&sim_cfg, data.fingerprint()));
    let sim = compute_similarity(&data.graph, &data.features, &sim_cfg)?;
    let out = cfg.output("similarity.bin")?;
    cache::write(&out, &sim, hash)?;
    let (min, mean, max) = sim.summary();
    let mode = serde_json::to_value(sim_cfg.structural_mode).expect("mode serializes");
    println!(
        "n={} mode={} beta={} hash={} min={min:.6} mean={mean:.6} max={max:.6}",
        sim.size(),
        mode.as_str().unwrap_or("?"),
        sim_cfg.beta,
        to_hex(hash)
    );
    log::info!("wrote {}", out.display());
    Ok(())
}

fn cmd_train(path: &Path) -> Result<()> {
    let cfg = CliConfig::load(path)?;
    let data = cfg.dataset()?;
    let out = run_experiment(&data, &cfg.experiment)?;
    let stem = cfg.run_stem();
    let hash = cfg.experiment.hash();
    let comment = vec![
        format!("config_hash={}", to_hex(hash)),
        format!("run={stem}"),
    ];
    let emb_path = cfg.output(&format!("{stem}.embeddings.csv"))?;
    write_embeddings(&emb_path, out.embeddings.view(), &comment)?;
    out.report.write_jsonl(&cfg.output(&format!("{stem}.report.jsonl"))?)?;
    out.params.save(&cfg.output(&format!("{stem}.ckpt"))?, hash)?;
    log::info!(
        "{stem}: val {:.4} test {:.4} in {:.1}s; outputs in {}",
        out.report.val_accuracy.unwrap_or(f64::NAN),
        out.report.test_accuracy.unwrap_or(f64::NAN),
        out.report.wall_clock_secs,
        cfg.output_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ProbeRecord {
    config_hash: String,
    embeddings: PathBuf,
    val_accuracy: f64,
    test_accuracy: f64,
    best_iteration: usize,
}

fn cmd_probe(path: &Path) -> Result<()> {
    let cfg = CliConfig::load(path)?;
    let data = cfg.dataset()?;
    let stem = cfg.run_stem();
    let emb_path = match &cfg.embeddings {
        Some(p) => p.clone(),
        None => cfg.output_dir.join(format!("{stem}.embeddings.csv")),
    };
    let emb = read_embeddings(&emb_path)?;
    if emb.nrows() != data.graph.node_count() {
        return Err(Error::Input(format!(
            "{} has {} rows but the dataset has {} nodes",
            emb_path.display(),
            emb.nrows(),
            data.graph.node_count()
        )));
    }
    let split = split_for(&data, &cfg.experiment)?;
    let r = linear_probe(emb.view(), &data.labels, &split, &cfg.experiment.probe)?;
    let record = ProbeRecord {
        config_hash: to_hex(cfg.experiment.hash()),
        embeddings: emb_path,
        val_accuracy: r.val_accuracy,
        test_accuracy: r.test_accuracy,
        best_iteration: r.best_iteration,
    };
    let out = cfg.output(&format!("{stem}.probe.json"))?;
    let text = serde_json::to_string_pretty(&record).expect("record serializes");
    fs::write(&out, text + "\n").map_err(|e| Error::Io { path: out.clone(), source: e })?;
    log::info!("probe: val {:.4} test {:.4}", r.val_accuracy, r.test_accuracy);
    Ok(())
}

fn cmd_ablate(path: &Path) -> Result<()> {
    let cfg = CliConfig::load(path)?;
    let data = cfg.dataset()?;
    let rows = run_ablation(&data, &cfg.experiment, &cfg.seeds)?;
    let out = cfg.output("ablation.csv")?;
    write_ablation_csv(&out, &rows, config_hash(&(&cfg.experiment, &cfg.seeds)))?;
    for r in &rows {
        log::info!("{:<11} {:.4} ± {:.4}", r.variant.name(), r.mean_acc, r.std_acc);
    }
    log::info!("wrote {}", out.display());
    Ok(())
}

fn cmd_synth(spec_path: &Path, out: &Path) -> Result<()> {
    let spec: SbmSpec = parse_json(spec_path)?;
    let data = gen_sbm(&spec)?;
    fs::create_dir_all(out).map_err(|e| Error::Io { path: out.to_path_buf(), source: e })?;
    save_dataset(&DatasetPaths::in_dir(out), &data)?;
    log::info!(
        "wrote {} nodes, {} edges, {} classes to {}",
        data.graph.node_count(),
        data.graph.edge_count(),
        data.labels.num_classes(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sim { config } => cmd_sim(config),
        Command::Train { config } => cmd_train(config),
        Command::Probe { config } => cmd_probe(config),
        Command::Ablate { config } => cmd_ablate(config),
        Command::Synth { spec, out } => cmd_synth(spec, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
