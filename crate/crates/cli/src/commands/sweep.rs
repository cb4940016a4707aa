use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use etlsentry::detector::DEFAULT_QUANTILE;
use etlsentry::eval::{
    emit_report_in, report_file_name, sweep_latent_dim, sweep_learning_rate, DataBundle, Knob,
    ReportFormat, SplitFractions, SweepOptions, SweepResult, DEFAULT_K_GRID, DEFAULT_LR_GRID,
};
use etlsentry::preprocess::FeatureSchema;
use etlsentry::records::read_stream;
use etlsentry::streamgen::LabeledEvent;

use super::{attach_labels, path_list, TrainFlags};
use crate::failure::{runtime, usage, CmdResult};
use crate::manifest::{to_value, write_manifest, Invocation};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Labeled stream; split 60/20/20 in time order into train / validation / test.
    #[arg(long)]
    pub data: PathBuf,
    /// Label side-file for a stream written with `--holdout`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Hyperparameter to vary: `lr` or `k`.
    #[arg(long)]
    pub knob: Knob,
    /// Comma-separated grid; defaults to 0.0001,0.0005,0.001,0.005,0.01 for lr and 4,8,16,32,64,128 for k.
    #[arg(long)]
    pub grid: Option<String>,
    /// Base configuration; the swept knob overrides its flag.
    #[command(flatten)]
    pub train: TrainFlags,
    /// Calibration quantile for the threshold on validation normals.
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    pub quantile: f64,
    /// Directory for `sweep_<knob>_<seed>.<ext>` reports.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

enum Grid {
    Rates(Vec<f64>),
    Dims(Vec<usize>),
}

fn parse_grid(knob: Knob, text: Option<&str>) -> CmdResult<Grid> {
    let Some(text) = text else {
        return Ok(match knob {
            Knob::LearningRate => Grid::Rates(DEFAULT_LR_GRID.to_vec()),
            Knob::LatentDim => Grid::Dims(DEFAULT_K_GRID.to_vec()),
        });
    };
    let cells: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .collect();
    if cells.is_empty() {
        return Err(usage("--grid is empty"));
    }
    match knob {
        Knob::LearningRate => {
            let rates = cells
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| usage(format!("bad learning rate `{c}` in --grid")))
                })
                .collect::<CmdResult<Vec<_>>>()?;
            if rates
                .iter()
                .any(|r| r.is_nan() || *r <= 0.0 || r.is_infinite())
            {
                return Err(usage("learning rates in --grid must be positive"));
            }
            if rates.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("learning rates in --grid must be strictly ascending"));
            }
            Ok(Grid::Rates(rates))
        }
        Knob::LatentDim => {
            let dims = cells
                .iter()
                .map(|c| {
                    c.parse::<usize>()
                        .map_err(|_| usage(format!("bad latent dimension `{c}` in --grid")))
                })
                .collect::<CmdResult<Vec<_>>>()?;
            if dims.contains(&0) {
                return Err(usage("latent dimensions in --grid must be >= 1"));
            }
            Ok(Grid::Dims(dims))
        }
    }
}

fn labeled_events(path: &Path, labels: Option<&Path>) -> CmdResult<Vec<LabeledEvent>> {
    attach_labels(read_stream(path)?, labels)?
        .into_iter()
        .map(|r| {
            let line = r.map_err(|e| runtime(format!("{}: {}", path.display(), e.error)))?;
            let label = line.label.ok_or_else(|| {
                runtime(format!(
                    "sweep needs labeled events: event {} in {} has no label (pass --labels)",
                    line.event_id,
                    path.display()
                ))
            })?;
            Ok(LabeledEvent {
                event_id: line.event_id,
                event: line.event,
                label,
                anomaly_class: line.anomaly_class,
            })
        })
        .collect()
}

fn print_table(r: &SweepResult) {
    let show = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
    println!(
        "{:>10} {:>8} {:>8} {:>9} {:>8}",
        r.knob.name(),
        "auc",
        "acc",
        "precision",
        "recall"
    );
    for p in &r.points {
        let m = p.report.as_ref();
        println!(
            "{:>10} {:>8} {:>8} {:>9} {:>8}{}",
            p.knob_value,
            show(m.map(|m| m.auc)),
            show(m.map(|m| m.acc)),
            show(m.and_then(|m| m.precision)),
            show(m.and_then(|m| m.recall)),
            if p.report.is_none() { "  diverged" } else { "" }
        );
    }
}

pub fn run(args: SweepArgs, inv: &Invocation) -> CmdResult {
    let start = Instant::now();
    let base = args.train.to_config()?;
    let grid = parse_grid(args.knob, args.grid.as_deref())?;
    if !(args.quantile > 0.0 && args.quantile < 1.0) {
        return Err(usage(format!(
            "--quantile must be in (0, 1), got {}",
            args.quantile
        )));
    }

    let events = labeled_events(&args.data, args.labels.as_deref())?;
    let bundle = DataBundle::from_events(
        &events,
        &FeatureSchema::default(),
        SplitFractions::default(),
    )?;
    let opts = SweepOptions {
        seed: base.seed,
        quantile: args.quantile,
        parallel: true,
    };
    let result = match &grid {
        Grid::Rates(g) => sweep_learning_rate(&base, g, &bundle, opts)?,
        Grid::Dims(g) => sweep_latent_dim(&base, g, &bundle, opts)?,
    };

    fs::create_dir_all(&args.out).map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;
    let mut outputs = vec![emit_report_in(&result, &args.out, args.format)?];
    // the CSV layout has no room for divergence status or the overcomplete flag
    if args.format == ReportFormat::Csv {
        outputs.push(emit_report_in(&result, &args.out, ReportFormat::Json)?);
    }
    let manifest = args
        .out
        .join(report_file_name(result.knob, result.seed, args.format))
        .with_extension("manifest.json");
    outputs.push(manifest.clone());

    print_table(&result);
    match result.knob {
        Knob::LatentDim => {
            for p in result.points.iter().filter(|p| p.overcomplete) {
                eprintln!(
                    "note: k={} exceeds the input dimension d={} (overcomplete)",
                    p.knob_value,
                    bundle.dim()
                );
            }
        }
        Knob::LearningRate if base.k > bundle.dim() => eprintln!(
            "note: k={} exceeds the input dimension d={} (overcomplete)",
            base.k,
            bundle.dim()
        ),
        Knob::LearningRate => {}
    }

    let config = serde_json::json!({
        "knob": result.knob.name(),
        "grid": result.grid(),
        "base": to_value(&base)?,
        "quantile": args.quantile,
        "format": args.format.to_string(),
        "split": { "train": 0.6, "validation": 0.2, "test": 0.2 },
    });
    let m = inv.manifest(
        "sweep",
        Some(base.seed),
        config,
        path_list(&[Some(&args.data), args.labels.as_ref()]),
        outputs,
        start.elapsed(),
    );
    write_manifest(&m, &manifest)
}
