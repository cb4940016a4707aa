use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use etlsentry::records::{write_jsonl, LabelLine, StreamLine};
use etlsentry::streamgen::{generate, ClassMix, StreamConfig};

use super::{ensure_not_input, DEFAULT_SEED};
use crate::failure::{usage, CmdResult};
use crate::manifest::{manifest_path, to_value, write_manifest, Invocation};

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Number of events.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Fraction of events turned into anomalies, in [0, 1).
    #[arg(long, default_value_t = 0.05)]
    pub anomaly_rate: f64,
    /// Anomaly class weights; omitted classes get weight 0.
    #[arg(
        long,
        default_value = "delay=0.25,missing=0.25,duplicate=0.25,spike=0.25"
    )]
    pub mix: ClassMix,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output stream file (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Write labels to `<out stem>.labels.jsonl` instead of inline.
    #[arg(long)]
    pub holdout: bool,
}

pub fn run(args: GenerateArgs, inv: &Invocation) -> CmdResult {
    let start = Instant::now();
    let cfg = StreamConfig {
        n_events: args.n,
        anomaly_rate: args.anomaly_rate,
        mix: args.mix,
        seed: args.seed,
        ..StreamConfig::default()
    };
    cfg.validate().map_err(usage)?;
    let labels_path = args.out.with_extension("labels.jsonl");
    let manifest = manifest_path(&args.out);
    if args.holdout {
        ensure_not_input(&labels_path, &[&args.out])?;
    }

    let events = generate(&cfg)?;
    let mut outputs = vec![args.out.clone()];
    if args.holdout {
        write_jsonl(&args.out, events.iter().map(StreamLine::blind))?;
        write_jsonl(
            &labels_path,
            events.iter().map(|e| LabelLine {
                event_id: e.event_id,
                label: e.label,
                anomaly_class: e.anomaly_class,
            }),
        )?;
        outputs.push(labels_path);
    } else {
        write_jsonl(&args.out, events.iter().map(StreamLine::labeled))?;
    }

    let n_anom = events.iter().filter(|e| e.label).count();
    let config = serde_json::json!({
        "stream": to_value(&cfg)?,
        "holdout": args.holdout,
    });
    outputs.push(manifest.clone());
    let m = inv.manifest(
        "generate",
        Some(cfg.seed),
        config,
        vec![],
        outputs,
        start.elapsed(),
    );
    write_manifest(&m, &manifest)?;
    println!(
        "wrote {} events ({} anomalous) to {}",
        events.len(),
        n_anom,
        args.out.display()
    );
    Ok(())
}
