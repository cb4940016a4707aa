use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args};
use etlsentry::autoencoder::{load_model, Model};
use etlsentry::detector::{
    calibrate_threshold, score, score_stream, DetectorConfig, StreamInput, StreamOutcome,
    DEFAULT_QUANTILE,
};
use etlsentry::preprocess::vectorize;
use etlsentry::records::{read_stream, write_jsonl};
use serde::Serialize;

use super::{attach_labels, ensure_not_input, path_list};
use crate::failure::{runtime, usage, CmdResult};
use crate::manifest::{manifest_path, write_manifest, Invocation};

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("threshold").required(true).args(["delta", "calibrate"])))]
pub struct DetectArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Stream file to score.
    #[arg(long)]
    pub input: PathBuf,
    /// Label side-file for the input stream; truth labels are copied into the output.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Fixed threshold on the reconstruction error.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Validation stream; the threshold becomes the `--quantile` of its normal events' scores.
    #[arg(long)]
    pub calibrate: Option<PathBuf>,
    /// Label side-file for the validation stream.
    #[arg(long, requires = "calibrate")]
    pub calibrate_labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    pub quantile: f64,
    /// Detection file to write (JSON lines); a CSV mirror goes to `<out stem>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    event_id: u64,
    score: Option<f64>,
    is_anomaly: Option<bool>,
    truth_label: Option<bool>,
    error: Option<&'a str>,
}

fn write_csv_mirror(path: &Path, outcomes: &[StreamOutcome]) -> CmdResult {
    let fail = |e: csv::Error| runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    for o in outcomes {
        let row = match o {
            StreamOutcome::Detection(d) => CsvRow {
                event_id: d.event_id,
                score: Some(d.score),
                is_anomaly: Some(d.is_anomaly),
                truth_label: d.truth_label,
                error: None,
            },
            StreamOutcome::Error(e) => CsvRow {
                event_id: e.event_id,
                score: None,
                is_anomaly: None,
                truth_label: None,
                error: Some(&e.error),
            },
        };
        w.serialize(row).map_err(fail)?;
    }
    w.flush()
        .map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Scores the normal events of a validation stream (all of them if it is unlabeled).
fn calibration_scores(model: &Model, path: &Path, labels: Option<&Path>) -> CmdResult<Vec<f64>> {
    let lines = attach_labels(read_stream(path)?, labels)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| runtime(format!("{}: {}", path.display(), e.error)))?;
    let any_labels = lines.iter().any(|l| l.label.is_some());
    lines
        .iter()
        .filter(|l| !any_labels || l.label == Some(false))
        .map(|l| {
            let x = vectorize(&l.event, &model.schema)?;
            Ok(score(&model.params, &model.stats, &x)?.value())
        })
        .collect()
}

pub fn run(args: DetectArgs, inv: &Invocation) -> CmdResult {
    let start = Instant::now();
    if !(args.quantile > 0.0 && args.quantile < 1.0) {
        return Err(usage(format!(
            "--quantile must be in (0, 1), got {}",
            args.quantile
        )));
    }
    if let Some(d) = args.delta {
        DetectorConfig::new(d).map_err(usage)?;
    }
    let manifest = manifest_path(&args.out);
    let mirror = args.out.with_extension("csv");
    if mirror == args.out {
        return Err(usage(
            "--out names the JSON-lines file; pick a name not ending in .csv",
        ));
    }
    let input_paths = path_list(&[
        Some(&args.model),
        Some(&args.input),
        args.labels.as_ref(),
        args.calibrate.as_ref(),
        args.calibrate_labels.as_ref(),
    ]);
    let input_refs: Vec<&Path> = input_paths.iter().map(PathBuf::as_path).collect();
    ensure_not_input(&args.out, &input_refs)?;
    ensure_not_input(&manifest, &input_refs)?;
    ensure_not_input(&mirror, &input_refs)?;

    let model = load_model(&args.model)?;
    let (delta, source) = match (&args.delta, &args.calibrate) {
        (Some(d), _) => (*d, "explicit"),
        (None, Some(path)) => {
            let scores = calibration_scores(&model, path, args.calibrate_labels.as_deref())?;
            (calibrate_threshold(&scores, args.quantile)?, "calibrated")
        }
        (None, None) => unreachable!("clap requires one threshold source"),
    };
    let cfg = DetectorConfig {
        delta,
        calibration_quantile: args.quantile,
    };

    let items: Vec<_> = attach_labels(read_stream(&args.input)?, args.labels.as_deref())?
        .into_iter()
        .map(|r| {
            r.map(|l| StreamInput {
                event_id: l.event_id,
                event: l.event,
                truth_label: l.label,
            })
        })
        .collect();
    let outcomes = score_stream(&model, &items, &cfg);
    write_jsonl(&args.out, &outcomes)?;
    write_csv_mirror(&mirror, &outcomes)?;

    let (mut flagged, mut scored) = (0usize, 0usize);
    for o in &outcomes {
        if let StreamOutcome::Detection(d) = o {
            scored += 1;
            flagged += usize::from(d.is_anomaly);
        }
    }
    let errors = outcomes.len() - scored;
    let config = serde_json::json!({
        "delta": delta,
        "threshold_source": source,
        "quantile": (source == "calibrated").then_some(args.quantile),
    });
    let m = inv.manifest(
        "detect",
        None,
        config,
        input_paths,
        vec![args.out.clone(), mirror, manifest.clone()],
        start.elapsed(),
    );
    write_manifest(&m, &manifest)?;
    println!(
        "{flagged} of {scored} events flagged as anomalous ({errors} error records), delta {delta}"
    );
    Ok(())
}
