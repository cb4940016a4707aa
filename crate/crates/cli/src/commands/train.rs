use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use etlsentry::autoencoder::{save_model, train, Model};
use etlsentry::preprocess::{fit_stats, standardize_matrix, vectorize_all, FeatureSchema};
use etlsentry::records::{read_stream, StreamLine};

use super::{attach_labels, ensure_not_input, path_list, TrainFlags};
use crate::failure::{runtime, CmdResult};
use crate::manifest::{manifest_path, to_value, write_manifest, Invocation};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Stream file to train on.
    #[arg(long)]
    pub input: PathBuf,
    /// Label side-file for a stream written with `--holdout`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Model file to write; the loss history goes to `<out stem>.history.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Keeps normal-labeled lines when labels exist, everything when none do.
fn select_training(lines: Vec<StreamLine>) -> CmdResult<(Vec<StreamLine>, &'static str)> {
    let labeled = lines.iter().filter(|l| l.label.is_some()).count();
    if labeled == 0 {
        return Ok((lines, "events (unlabeled input, all used)"));
    }
    if labeled != lines.len() {
        return Err(runtime(format!(
            "{} of {} events carry labels; label all of them or none",
            labeled,
            lines.len()
        )));
    }
    Ok((
        lines
            .into_iter()
            .filter(|l| l.label == Some(false))
            .collect(),
        "normal-labeled events",
    ))
}

pub fn run(args: TrainArgs, inv: &Invocation) -> CmdResult {
    let start = Instant::now();
    let cfg = args.train.to_config()?;
    let history_path = args.out.with_extension("history.csv");
    let manifest = manifest_path(&args.out);
    let mut inputs: Vec<&std::path::Path> = vec![&args.input];
    if let Some(l) = &args.labels {
        inputs.push(l);
    }
    for out in [&args.out, &history_path, &manifest] {
        ensure_not_input(out, &inputs)?;
    }

    let lines = attach_labels(read_stream(&args.input)?, args.labels.as_deref())?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| runtime(format!("{}: {}", args.input.display(), e.error)))?;
    let (lines, which) = select_training(lines)?;
    if lines.is_empty() {
        return Err(runtime("no events to train on"));
    }

    let schema = FeatureSchema::default();
    let events: Vec<_> = lines.into_iter().map(|l| l.event).collect();
    let raw = vectorize_all(&events, &schema)?;
    let stats = fit_stats(&raw)?;
    let x = standardize_matrix(&raw, &stats)?;
    let (params, history) = train(&x, &cfg)?;

    let model = Model {
        params,
        stats,
        schema,
    };
    save_model(&model, &args.out)?;
    fs::write(&history_path, history.to_csv())
        .map_err(|e| runtime(format!("{}: {e}", history_path.display())))?;

    let outputs = vec![args.out.clone(), history_path, manifest.clone()];
    let m = inv.manifest(
        "train",
        Some(cfg.seed),
        serde_json::json!({ "train": to_value(&cfg)?, "rows": x.rows(), "d": x.cols() }),
        path_list(&[Some(&args.input), args.labels.as_ref()]),
        outputs,
        start.elapsed(),
    );
    write_manifest(&m, &manifest)?;

    let last = history.final_loss().unwrap_or(history.initial);
    println!(
        "trained d={} k={} on {} {} for {} epochs: loss {:.6} -> {:.6}; model written to {}",
        x.cols(),
        cfg.k,
        x.rows(),
        which,
        cfg.epochs,
        history.initial.l_total,
        last.l_total,
        args.out.display()
    );
    Ok(())
}
