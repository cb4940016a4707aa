//! Detection metrics, benchmark data bundles, hyperparameter sweeps, and report files.

mod bundle;
mod metrics;
mod report;
mod sweep;

pub use bundle::{standard_benchmark, standard_stream_config, DataBundle, SplitFractions};
pub use metrics::{
    auc, confusion_at, metrics_at_threshold, metrics_from_verdicts, Confusion, MetricsReport,
};
pub use report::{
    emit_report, emit_report_in, metrics_to_csv, parse_sweep_csv, report_file_name, sweep_to_csv,
    sweep_to_json, CsvRow, ReportFormat, CSV_HEADER,
};
pub use sweep::{
    run_config, sweep_latent_dim, sweep_learning_rate, Knob, PointStatus, RunOutcome, SweepOptions,
    SweepPoint, SweepResult, DEFAULT_K_GRID, DEFAULT_LR_GRID,
};

use crate::autoencoder::{encode, AutoencoderParams};
use crate::error::Result;
use crate::numerics::Matrix;

/// Mean `‖h‖₁` of the latent codes of the rows of `x_std`.
pub fn mean_latent_l1(params: &AutoencoderParams, x_std: &Matrix) -> Result<f64> {
    let mut total = 0.0;
    for row in x_std.row_iter() {
        total += encode(params, row)?.l1_norm();
    }
    Ok(total / x_std.rows().max(1) as f64)
}
