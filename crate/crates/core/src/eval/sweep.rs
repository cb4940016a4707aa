use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{train, AutoencoderParams, TrainConfig};
use crate::detector::{calibrate_threshold, score_matrix};
use crate::error::{Error, Result};

use super::bundle::DataBundle;
use super::metrics::{metrics_at_threshold, MetricsReport};

pub const DEFAULT_LR_GRID: [f64; 5] = [0.0001, 0.0005, 0.001, 0.005, 0.01];
pub const DEFAULT_K_GRID: [usize; 6] = [4, 8, 16, 32, 64, 128];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Knob {
    #[serde(rename = "lr")]
    LearningRate,
    #[serde(rename = "k")]
    LatentDim,
}

impl Knob {
    pub fn name(self) -> &'static str {
        match self {
            Knob::LearningRate => "lr",
            Knob::LatentDim => "k",
        }
    }
}

impl fmt::Display for Knob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Knob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" | "learning_rate" => Ok(Knob::LearningRate),
            "k" | "latent_dim" => Ok(Knob::LatentDim),
            other => Err(Error::Contract(format!(
                "unknown sweep knob `{other}` (use lr or k)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub knob_value: f64,
    pub status: PointStatus,
    /// `None` when training diverged.
    pub report: Option<MetricsReport>,
    /// Latent dimension larger than the input dimension.
    pub overcomplete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub knob: Knob,
    pub seed: u64,
    pub quantile: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.knob_value).collect()
    }

    pub fn point(&self, knob_value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.knob_value == knob_value)
    }
}

/// Outcome of training one configuration and evaluating it on a bundle.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub params: AutoencoderParams,
    pub report: MetricsReport,
    pub test_scores: Vec<f64>,
}

/// Train on `bundle.train`, calibrate δ on validation normals at `quantile`, report on test.
pub fn run_config(bundle: &DataBundle, cfg: &TrainConfig, quantile: f64) -> Result<RunOutcome> {
    let (params, _) = train(&bundle.train, cfg)?;
    let val_scores = score_matrix(&params, &bundle.validation)?;
    let delta = calibrate_threshold(&val_scores, quantile)?;
    let test_scores = score_matrix(&params, &bundle.test)?;
    let report = metrics_at_threshold(&test_scores, &bundle.test_labels, delta)?;
    Ok(RunOutcome {
        params,
        report,
        test_scores,
    })
}

fn run_point(
    bundle: &DataBundle,
    cfg: &TrainConfig,
    knob_value: f64,
    quantile: f64,
) -> Result<SweepPoint> {
    let overcomplete = cfg.k > bundle.dim();
    match run_config(bundle, cfg, quantile) {
        Ok(out) => Ok(SweepPoint {
            knob_value,
            status: PointStatus::Ok,
            report: Some(out.report),
            overcomplete,
        }),
        Err(Error::TrainingDiverged { .. }) | Err(Error::NonFinite { .. }) => Ok(SweepPoint {
            knob_value,
            status: PointStatus::Diverged,
            report: None,
            overcomplete,
        }),
        Err(e) => Err(e),
    }
}

/// Execution options shared by both sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub seed: u64,
    pub quantile: f64,
    pub parallel: bool,
}

impl SweepOptions {
    pub fn new(seed: u64) -> Self {
        SweepOptions {
            seed,
            quantile: crate::detector::DEFAULT_QUANTILE,
            parallel: true,
        }
    }
}

fn run_grid(
    knob: Knob,
    configs: Vec<(f64, TrainConfig)>,
    bundle: &DataBundle,
    opts: SweepOptions,
) -> Result<SweepResult> {
    let points: Result<Vec<SweepPoint>> = if opts.parallel {
        configs
            .par_iter()
            .map(|(v, cfg)| run_point(bundle, cfg, *v, opts.quantile))
            .collect()
    } else {
        configs
            .iter()
            .map(|(v, cfg)| run_point(bundle, cfg, *v, opts.quantile))
            .collect()
    };
    Ok(SweepResult {
        knob,
        seed: opts.seed,
        quantile: opts.quantile,
        points: points?,
    })
}

/// One model per learning rate, same data and seed; a diverged run is recorded, not fatal.
pub fn sweep_learning_rate(
    base: &TrainConfig,
    grid: &[f64],
    bundle: &DataBundle,
    opts: SweepOptions,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Contract("learning-rate grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Contract(format!(
            "learning-rate grid must ascend: {grid:?}"
        )));
    }
    let configs = grid
        .iter()
        .map(|&lr| {
            let cfg = TrainConfig {
                learning_rate: lr,
                seed: opts.seed,
                ..base.clone()
            };
            cfg.validate().map(|_| (lr, cfg))
        })
        .collect::<Result<Vec<_>>>()?;
    run_grid(Knob::LearningRate, configs, bundle, opts)
}

/// One model per latent dimension. `k > d` is allowed and flagged as overcomplete.
pub fn sweep_latent_dim(
    base: &TrainConfig,
    grid: &[usize],
    bundle: &DataBundle,
    opts: SweepOptions,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Contract("latent-dimension grid is empty".into()));
    }
    let configs = grid
        .iter()
        .map(|&k| {
            let cfg = TrainConfig {
                k,
                seed: opts.seed,
                ..base.clone()
            };
            cfg.validate().map(|_| (k as f64, cfg))
        })
        .collect::<Result<Vec<_>>>()?;
    run_grid(Knob::LatentDim, configs, bundle, opts)
}
