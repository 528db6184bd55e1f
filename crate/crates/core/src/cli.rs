//! Command-line front end.
//!
//! Every subcommand writes `run_manifest.json` into its output directory with
//! the argument vector, the resolved configuration and SHA-256 digests of the
//! input files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::data::synthetic::{generate, SyntheticConfig};
use crate::data::{emit_eda, load_csv, stratified_split, write_csv, EdaReport, SchemaConfig};
use crate::error::{Error, Result};
use crate::metrics::{format_report, ReportFormat};
use crate::model::{ModelParams, DEFAULT_THRESHOLD};
use crate::train::{
    curves_svg, evaluate, finetune, predict_dataset, train_scratch, write_epoch_log, TrainConfig, TrainOutcome,
};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Parser)]
#[command(name = "msclstm", version, about = "Multi-scale convolutional LSTM anomaly detection for KPI telemetry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class balance and feature correlations.
    Eda {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "eda")]
        out: PathBuf,
    },
    /// Train a model from scratch.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Fine-tune a saved model on another dataset.
    Finetune {
        /// Source checkpoint.
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value = "finetune")]
        out: PathBuf,
    },
    /// Classification report for a labeled dataset.
    Evaluate {
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f32,
        /// Evaluate only the validation split a training run with this seed would hold out.
        #[arg(long)]
        validation_split: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        val_fraction: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value = "evaluation")]
        out: PathBuf,
    },
    /// Per-row anomaly probabilities and labels.
    Predict {
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f32,
        #[arg(long, default_value = "predictions")]
        out: PathBuf,
    },
    /// Header, tensor shapes and parameter count of a checkpoint.
    Inspect {
        checkpoint: PathBuf,
        #[arg(long, default_value = "inspect")]
        out: PathBuf,
    },
    /// Write a synthetic KPI dataset.
    Generate {
        #[arg(long, value_enum, default_value_t = Domain::Source)]
        domain: Domain,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Row count; defaults to the domain's size.
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    pub dataset: PathBuf,
    /// JSON schema configuration.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub no_smote: bool,
    #[arg(long)]
    pub freeze_features: bool,
    #[arg(long)]
    pub threshold: Option<f32>,
}

impl TrainArgs {
    fn resolve(&self, mut cfg: TrainConfig) -> TrainConfig {
        cfg.epochs = self.epochs.unwrap_or(cfg.epochs);
        cfg.batch_size = self.batch_size.unwrap_or(cfg.batch_size);
        cfg.learning_rate = self.lr.unwrap_or(cfg.learning_rate);
        cfg.val_fraction = self.val_fraction.unwrap_or(cfg.val_fraction);
        cfg.threshold = self.threshold.unwrap_or(cfg.threshold);
        cfg.smote_enabled = !self.no_smote;
        cfg.freeze_features = self.freeze_features;
        cfg
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Eda { data, out } => {
            let ds = load_csv(&data.dataset, &schema_config(data)?)?;
            emit_eda(&EdaReport::from_dataset(&ds)?, out)?;
            println!("{} rows ({} dropped), EDA written to {}", ds.len(), ds.dropped_rows(), out.display());
            write_manifest(out, "eda", argv, json!({ "schema": schema_config(data)? }), &data_inputs(data))
        }
        Command::Train { data, train, out } => {
            let ds = load_csv(&data.dataset, &schema_config(data)?)?;
            let cfg = train.resolve(TrainConfig::scratch(train.seed));
            let outcome = train_scratch(&ds, &cfg)?;
            finish_training(out, "train", argv, &cfg, data, None, &outcome)
        }
        Command::Finetune { checkpoint, data, train, out } => {
            let source = load_checkpoint(checkpoint)?;
            let ds = load_csv(&data.dataset, &schema_config(data)?)?;
            let cfg = train.resolve(TrainConfig::finetune(train.seed));
            let outcome = finetune(&source, &ds, &cfg)?;
            finish_training(out, "finetune", argv, &cfg, data, Some(checkpoint), &outcome)
        }
        Command::Evaluate { checkpoint, data, threshold, validation_split, seed, val_fraction, format, out } => {
            let ckpt = load_checkpoint(checkpoint)?;
            let mut ds = load_csv(&data.dataset, &schema_config(data)?)?;
            if *validation_split {
                // Same split stream as training with this seed.
                let split_cfg = TrainConfig { val_fraction: *val_fraction, ..TrainConfig::scratch(*seed) };
                split_cfg.validate()?;
                ds = stratified_split(&ds, *val_fraction, split_stream(*seed))?.1;
            }
            let report = evaluate(&ckpt, &ds, *threshold)?;
            let kind = match format {
                Format::Text => ReportFormat::Text,
                Format::Json => ReportFormat::Json,
            };
            println!("{}", format_report(&report, kind));
            create_dir(out)?;
            write_json(&out.join("report.json"), &report)?;
            let mut inputs = data_inputs(data);
            inputs.push(checkpoint.clone());
            write_manifest(
                out,
                "evaluate",
                argv,
                json!({
                    "schema": schema_config(data)?,
                    "threshold": threshold,
                    "validation_split": validation_split,
                    "seed": seed,
                    "val_fraction": val_fraction,
                }),
                &inputs,
            )
        }
        Command::Predict { checkpoint, data, threshold, out } => {
            let ckpt = load_checkpoint(checkpoint)?;
            let ds = load_csv(&data.dataset, &schema_config(data)?)?;
            let preds = predict_dataset(&ckpt, &ds, *threshold)?;
            create_dir(out)?;
            let mut csv = String::from("probability,label\n");
            for p in &preds {
                csv.push_str(&format!("{},{}\n", p.probability, p.label));
            }
            let path = out.join("predictions.csv");
            fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
            println!("{} predictions written to {}", preds.len(), path.display());
            if ds.dropped_rows() > 0 {
                log::warn!("{} malformed rows were skipped", ds.dropped_rows());
            }
            let mut inputs = data_inputs(data);
            inputs.push(checkpoint.clone());
            write_manifest(
                out,
                "predict",
                argv,
                json!({ "schema": schema_config(data)?, "threshold": threshold }),
                &inputs,
            )
        }
        Command::Inspect { checkpoint, out } => {
            let ckpt = load_checkpoint(checkpoint)?;
            print!("{}", describe(&ckpt));
            create_dir(out)?;
            write_manifest(out, "inspect", argv, json!({}), std::slice::from_ref(checkpoint))
        }
        Command::Generate { domain, seed, rows, out } => {
            let mut cfg = match domain {
                Domain::Source => SyntheticConfig::source(*seed),
                Domain::Target => SyntheticConfig::target(*seed),
            };
            cfg.rows = rows.unwrap_or(cfg.rows);
            let ds = generate(&cfg)?;
            create_dir(out)?;
            let name = match domain {
                Domain::Source => "source.csv",
                Domain::Target => "target.csv",
            };
            write_csv(&ds, &out.join(name))?;
            println!("{} rows written to {}", ds.len(), out.join(name).display());
            write_manifest(
                out,
                "generate",
                argv,
                json!({ "domain": domain, "seed": seed, "rows": cfg.rows }),
                &[],
            )
        }
    }
}

/// Seed of the split stream used by training for `seed`.
fn split_stream(seed: u64) -> u64 {
    seed ^ crate::data::fnv1a64(b"split")
}

/// Human-readable checkpoint summary.
pub fn describe(ckpt: &Checkpoint) -> String {
    let mut s = format!(
        "version: {}\nfeatures: {}\nfingerprint: {:016x}\ntensors:\n",
        ckpt.version,
        ckpt.feature_count(),
        ckpt.fingerprint
    );
    for (name, t) in ckpt.params.named_tensors() {
        s.push_str(&format!("  {name:<18} {:?}\n", t.shape()));
    }
    s.push_str(&format!("parameters: {}\n", ckpt.params.parameter_count()));
    s
}

fn finish_training(
    out: &Path,
    command: &str,
    argv: &[String],
    cfg: &TrainConfig,
    data: &DataArgs,
    source: Option<&PathBuf>,
    outcome: &TrainOutcome,
) -> Result<()> {
    create_dir(out)?;
    save_checkpoint(&outcome.checkpoint, &out.join(CHECKPOINT_FILE))?;
    write_epoch_log(&outcome.log, &out.join("epoch_log.csv"))?;
    let svg = out.join("curves.svg");
    fs::write(&svg, curves_svg(&outcome.log)).map_err(|e| Error::io(&svg, e))?;
    write_json(&out.join("report.json"), &outcome.report)?;
    println!("{}", format_report(&outcome.report, ReportFormat::Text));

    let mut inputs = data_inputs(data);
    inputs.extend(source.cloned());
    write_manifest(
        out,
        command,
        argv,
        json!({
            "schema": schema_config(data)?,
            "train": cfg,
            "optimizer_steps": outcome.steps,
            "train_rows": outcome.train_rows,
            "val_rows": outcome.val_rows,
        }),
        &inputs,
    )
}

fn schema_config(data: &DataArgs) -> Result<SchemaConfig> {
    match &data.schema {
        Some(path) => SchemaConfig::from_json_file(path),
        None => Ok(SchemaConfig::default()),
    }
}

fn data_inputs(data: &DataArgs) -> Vec<PathBuf> {
    std::iter::once(data.dataset.clone()).chain(data.schema.clone()).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_manifest(out: &Path, command: &str, argv: &[String], config: Value, inputs: &[PathBuf]) -> Result<()> {
    let digests = inputs
        .iter()
        .map(|p| Ok(json!({ "path": p, "sha256": sha256_file(p)? })))
        .collect::<Result<Vec<_>>>()?;
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": argv,
        "config": config,
        "inputs": digests,
    });
    write_json(&out.join(MANIFEST_FILE), &manifest)
}

/// Parameter count of a freshly built model with `f` features.
pub fn fresh_parameter_count(f: usize) -> Result<usize> {
    Ok(ModelParams::<f32>::build(f, 0)?.parameter_count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn train_defaults_resolve() {
        let cli = Cli::try_parse_from(args(&["msclstm", "train", "d.csv"])).unwrap();
        let Command::Train { train, .. } = cli.command else { panic!() };
        let cfg = train.resolve(TrainConfig::scratch(train.seed));
        assert_eq!(cfg, TrainConfig::scratch(0));
        let cli = Cli::try_parse_from(args(&["msclstm", "finetune", "m.ckpt", "d.csv", "--seed", "7", "--no-smote"])).unwrap();
        let Command::Finetune { train, .. } = cli.command else { panic!() };
        let cfg = train.resolve(TrainConfig::finetune(train.seed));
        assert_eq!((cfg.epochs, cfg.learning_rate, cfg.seed, cfg.smote_enabled), (20, 1e-4, 7, false));
    }

    #[test]
    fn split_stream_matches_training() {
        assert_eq!(split_stream(5), 5 ^ crate::data::fnv1a64(b"split"));
    }

    #[test]
    fn bad_flags_exit_2() {
        assert_eq!(run(args(&["msclstm", "train"])), 2);
        assert_eq!(run(args(&["msclstm", "bogus"])), 2);
        assert_eq!(run(args(&["msclstm", "--help"])), 0);
    }

    #[test]
    fn fresh_count() {
        assert_eq!(fresh_parameter_count(8).unwrap(), 57_545);
    }
}
