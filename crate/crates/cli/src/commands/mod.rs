mod detect;
mod evaluate;
mod generate;
mod replay;
mod sweep;
mod train;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use etlsentry::autoencoder::{
    ActivationKind, Activations, TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LAMBDA,
    DEFAULT_LATENT_DIM, DEFAULT_LEARNING_RATE,
};
use etlsentry::records::{read_labels, ErrorRecord, LabelLine, StreamLine};

use crate::failure::{usage, CmdResult};
use crate::manifest::Invocation;

pub const DEFAULT_SEED: u64 = 7;

#[derive(Parser, Debug)]
#[command(
    name = "etlsentry",
    version,
    about = "Autoencoder anomaly detection for ETL event streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a labeled synthetic event stream.
    Generate(generate::GenerateArgs),
    /// Fit standardization stats and train an autoencoder on normal events.
    Train(train::TrainArgs),
    /// Score a stream with a trained model and flag anomalies.
    Detect(detect::DetectArgs),
    /// Compute AUC / accuracy / precision / recall for a detection file.
    Evaluate(evaluate::EvaluateArgs),
    /// Train one model per learning rate or latent dimension and report test metrics.
    Sweep(sweep::SweepArgs),
    /// Re-run the command recorded in a manifest.
    Replay(replay::ReplayArgs),
}

pub fn run(command: Command, inv: Invocation) -> CmdResult {
    match command {
        Command::Generate(a) => generate::run(a, &inv),
        Command::Train(a) => train::run(a, &inv),
        Command::Detect(a) => detect::run(a, &inv),
        Command::Evaluate(a) => evaluate::run(a, &inv),
        Command::Sweep(a) => sweep::run(a, &inv),
        Command::Replay(a) => replay::run(a),
    }
}

/// Training hyperparameters shared by `train` and `sweep`.
#[derive(Args, Debug, Clone)]
pub struct TrainFlags {
    /// SGD learning rate.
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    /// Latent dimension.
    #[arg(long, default_value_t = DEFAULT_LATENT_DIM)]
    pub k: usize,
    /// L1 penalty on the latent code.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    /// Mini-batch size.
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Hidden-layer activation: identity, tanh, relu, sigmoid.
    #[arg(long, default_value = "tanh")]
    pub hidden: ActivationKind,
    /// Output-layer activation.
    #[arg(long = "output-activation", default_value = "identity")]
    pub output_activation: ActivationKind,
}

impl TrainFlags {
    pub fn to_config(&self) -> CmdResult<TrainConfig> {
        let cfg = TrainConfig {
            learning_rate: self.lr,
            lambda: self.lambda,
            epochs: self.epochs,
            batch_size: self.batch,
            seed: self.seed,
            k: self.k,
            activations: Activations {
                hidden: self.hidden,
                output: self.output_activation,
            },
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

/// Refuses to write an output over one of the inputs.
pub fn ensure_not_input(out: &Path, inputs: &[&Path]) -> CmdResult {
    let canon = |p: &Path| p.canonicalize().unwrap_or_else(|_| p.to_path_buf());
    let out_c = canon(out);
    match inputs.iter().find(|i| canon(i) == out_c) {
        Some(i) => Err(usage(format!(
            "output {} would overwrite input {}",
            out.display(),
            i.display()
        ))),
        None => Ok(()),
    }
}

/// Fills labels missing from stream lines using a label side-file.
pub fn attach_labels(
    lines: Vec<Result<StreamLine, ErrorRecord>>,
    labels: Option<&Path>,
) -> CmdResult<Vec<Result<StreamLine, ErrorRecord>>> {
    let Some(path) = labels else { return Ok(lines) };
    let side: HashMap<u64, LabelLine> = read_labels(path)?;
    Ok(lines
        .into_iter()
        .map(|r| {
            r.map(|mut line| {
                if line.label.is_none() {
                    if let Some(l) = side.get(&line.event_id) {
                        line.label = Some(l.label);
                        line.anomaly_class = l.anomaly_class;
                    }
                }
                line
            })
        })
        .collect())
}

pub fn path_list(paths: &[Option<&PathBuf>]) -> Vec<PathBuf> {
    paths.iter().flatten().map(|p| (*p).clone()).collect()
}
