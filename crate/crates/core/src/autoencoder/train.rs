use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};

use super::backprop::backprop;
use super::loss::{evaluate_loss, objective_unchecked, LossBreakdown};
use super::params::{init_params, Activations, AutoencoderParams, Gradients};

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_LATENT_DIM: usize = 32;
pub const DEFAULT_LAMBDA: f64 = 1e-4;
pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub k: usize,
    pub activations: Activations,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: DEFAULT_LEARNING_RATE,
            lambda: DEFAULT_LAMBDA,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 7,
            k: DEFAULT_LATENT_DIM,
            activations: Activations::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Contract(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Contract(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Contract("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Contract("batch size must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Contract("latent dimension must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    /// Loss of the freshly initialized model on the full training set.
    pub initial: LossBreakdown,
    pub epochs: Vec<LossBreakdown>,
    pub wall_time: Vec<Duration>,
}

impl TrainHistory {
    pub fn final_loss(&self) -> Option<LossBreakdown> {
        self.epochs.last().copied()
    }

    /// `epoch,l_rec,l_reg,l_total` rows, epochs numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,l_rec,l_reg,l_total\n");
        for (i, l) in self.epochs.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                l.l_rec,
                l.l_reg,
                l.l_total
            ));
        }
        s
    }
}

/// `θ ← θ − lr · g` for every parameter block.
pub fn sgd_step(p: &AutoencoderParams, g: &Gradients, lr: f64) -> Result<AutoencoderParams> {
    if !(lr > 0.0) {
        return Err(Error::Contract(format!(
            "learning rate must be > 0, got {lr}"
        )));
    }
    let mut next = p.clone();
    next.w_e.axpy(-lr, &g.w_e)?;
    next.w_d.axpy(-lr, &g.w_d)?;
    if g.b_e.len() != p.b_e.len() || g.b_d.len() != p.b_d.len() {
        return Err(Error::dims(
            "sgd_step",
            format!("biases {}/{}", p.b_e.len(), p.b_d.len()),
            format!("{}/{}", g.b_e.len(), g.b_d.len()),
        ));
    }
    for (v, d) in next.b_e.iter_mut().zip(g.b_e.iter()) {
        *v -= lr * d;
    }
    for (v, d) in next.b_d.iter_mut().zip(g.b_d.iter()) {
        *v -= lr * d;
    }
    Ok(next)
}

/// Mini-batch SGD on standardized rows.
///
/// Row order is reshuffled each epoch from `cfg.seed`; the final short batch is kept.
/// After every epoch the objective is evaluated on the whole training set; a
/// non-finite value aborts with [`Error::TrainingDiverged`].
pub fn train(x_train: &Matrix, cfg: &TrainConfig) -> Result<(AutoencoderParams, TrainHistory)> {
    cfg.validate()?;
    if x_train.rows() < cfg.batch_size {
        return Err(Error::InsufficientData(format!(
            "training set has {} rows, fewer than the batch size {}",
            x_train.rows(),
            cfg.batch_size
        )));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let mut init_rng = rng.fork(0);
    let mut shuffle_rng = rng.fork(1);

    let mut params = init_params(x_train.cols(), cfg.k, cfg.activations, &mut init_rng)?;
    let mut history = TrainHistory {
        initial: evaluate_loss(&params, x_train, cfg.lambda)?,
        ..TrainHistory::default()
    };
    let diverged = |epoch: usize| Error::TrainingDiverged {
        epoch,
        learning_rate: cfg.learning_rate,
    };

    let mut order: Vec<usize> = (0..x_train.rows()).collect();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = x_train.select_rows(chunk);
            let grads = match backprop(&params, &batch, cfg.lambda) {
                Ok(g) => g,
                Err(Error::NonFinite { .. }) => return Err(diverged(epoch)),
                Err(e) => return Err(e),
            };
            params = sgd_step(&params, &grads, cfg.learning_rate)?;
            if !params.is_finite() {
                return Err(diverged(epoch));
            }
        }
        if !objective_unchecked(&params, x_train, cfg.lambda).is_finite() {
            return Err(diverged(epoch));
        }
        let loss = evaluate_loss(&params, x_train, cfg.lambda).map_err(|_| diverged(epoch))?;
        if !loss.is_finite() {
            return Err(diverged(epoch));
        }
        history.epochs.push(loss);
        history.wall_time.push(started.elapsed());
    }
    Ok((params, history))
}
