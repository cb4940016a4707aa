//! Autoencoder-based anomaly detection for ETL event streams.
//!
//! Events are vectorized and standardized ([`preprocess`]), compressed and
//! reconstructed by a single-hidden-layer autoencoder ([`autoencoder`]), and
//! flagged when their squared reconstruction error exceeds a threshold
//! calibrated on held-out normal traffic ([`detector`]). [`streamgen`] produces
//! labeled synthetic streams; [`eval`] computes AUC / accuracy / precision /
//! recall and runs hyperparameter sweeps.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoencoder;
pub mod detector;
pub mod error;
pub mod eval;
pub mod numerics;
pub mod preprocess;
pub mod records;
pub mod streamgen;

pub use error::{Error, LoadError, Result};
