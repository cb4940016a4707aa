use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use etlsentry::detector::StreamOutcome;
use etlsentry::eval::{metrics_from_verdicts, metrics_to_csv, ReportFormat};
use etlsentry::records::{read_jsonl, read_labels};

use super::{ensure_not_input, path_list};
use crate::failure::{runtime, usage, CmdResult};
use crate::manifest::{manifest_path, read_manifest, write_manifest, Invocation};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Detection file written by `detect`.
    #[arg(long)]
    pub input: PathBuf,
    /// Label side-file, for detections made without truth labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Threshold the detections were made at; read from the detect manifest when omitted.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Report file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

fn recorded_delta(detections: &Path) -> CmdResult<f64> {
    let path = manifest_path(detections);
    if !path.exists() {
        return Err(runtime(format!(
            "no threshold given and no detect manifest at {}; pass --delta",
            path.display()
        )));
    }
    read_manifest(&path)?
        .config
        .get("delta")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| {
            runtime(format!(
                "{} does not record a delta; pass --delta",
                path.display()
            ))
        })
}

pub fn run(args: EvaluateArgs, inv: &Invocation) -> CmdResult {
    let start = Instant::now();
    let manifest = manifest_path(&args.out);
    let inputs = path_list(&[Some(&args.input), args.labels.as_ref()]);
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    ensure_not_input(&args.out, &refs)?;
    ensure_not_input(&manifest, &refs)?;
    if let Some(d) = args.delta {
        if !d.is_finite() {
            return Err(usage(format!("--delta must be finite, got {d}")));
        }
    }

    let outcomes: Vec<StreamOutcome> = read_jsonl(&args.input)?;
    let side = args.labels.as_deref().map(read_labels).transpose()?;
    let (mut scores, mut verdicts, mut truth) = (Vec::new(), Vec::new(), Vec::new());
    let (mut unlabeled, mut skipped) = (0usize, 0usize);
    for o in &outcomes {
        let StreamOutcome::Detection(d) = o else {
            skipped += 1;
            continue;
        };
        let label = d.truth_label.or_else(|| {
            side.as_ref()
                .and_then(|s| s.get(&d.event_id))
                .map(|l| l.label)
        });
        match label {
            Some(l) => {
                scores.push(d.score);
                verdicts.push(d.is_anomaly);
                truth.push(l);
            }
            None => unlabeled += 1,
        }
    }
    if unlabeled > 0 || truth.is_empty() {
        return Err(runtime(format!(
            "evaluation needs ground-truth labels: {unlabeled} of {} detections in {} have no truth label \
             (run detect with labeled input or pass --labels)",
            scores.len() + unlabeled,
            args.input.display()
        )));
    }
    let delta = match args.delta {
        Some(d) => d,
        None => recorded_delta(&args.input)?,
    };
    let report = metrics_from_verdicts(&scores, &verdicts, &truth, delta)?;

    let text = match args.format {
        ReportFormat::Csv => metrics_to_csv(&report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(runtime)?;
            s.push('\n');
            s
        }
    };
    fs::write(&args.out, text).map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;

    let m = inv.manifest(
        "evaluate",
        None,
        serde_json::json!({ "delta": delta, "format": args.format.to_string(), "error_records_skipped": skipped }),
        inputs,
        vec![args.out.clone(), manifest.clone()],
        start.elapsed(),
    );
    write_manifest(&m, &manifest)?;
    let show = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
    println!(
        "n={} auc={:.4} acc={:.4} precision={} recall={} (tp={} fp={} tn={} fn={})",
        report.n,
        report.auc,
        report.acc,
        show(report.precision),
        show(report.recall),
        report.confusion.tp,
        report.confusion.fp,
        report.confusion.tn,
        report.confusion.fn_
    );
    Ok(())
}
