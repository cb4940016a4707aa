use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

use super::params::AutoencoderParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_rec: f64,
    pub l_reg: f64,
    pub l_total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.l_rec.is_finite() && self.l_reg.is_finite() && self.l_total.is_finite()
    }
}

/// Mean over samples of `‖x_i − x̂_i‖²`. Not divided by the feature count.
pub fn reconstruction_loss(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::dims(
            "reconstruction_loss",
            x.shape_string(),
            x_hat.shape_string(),
        ));
    }
    if x.rows() == 0 {
        return Err(Error::InsufficientData(
            "reconstruction_loss on an empty batch".into(),
        ));
    }
    let sum: f64 = x
        .as_slice()
        .iter()
        .zip(x_hat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.rows() as f64)
}

/// `λ · mean_i ‖h_i‖₁` over a batch of latent codes (one per row).
pub fn latent_l1(h: &Matrix, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Contract(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if h.rows() == 0 || lambda == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = h.as_slice().iter().map(|v| v.abs()).sum();
    Ok(lambda * sum / h.rows() as f64)
}

pub fn total_loss(l_rec: f64, l_reg: f64) -> LossBreakdown {
    LossBreakdown {
        l_rec,
        l_reg,
        l_total: l_rec + l_reg,
    }
}

/// Runs the batch forward and returns `(latents, reconstructions)` as row matrices.
pub fn forward_batch(p: &AutoencoderParams, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let k = p.latent_dim();
    let d = p.input_dim();
    if x.cols() != d {
        return Err(Error::dims(
            "forward_batch",
            format!("d={d}"),
            x.shape_string(),
        ));
    }
    let mut h = Vec::with_capacity(x.rows() * k);
    let mut x_hat = Vec::with_capacity(x.rows() * d);
    for row in x.row_iter() {
        let t = p.forward(row)?;
        h.extend_from_slice(&t.h);
        x_hat.extend_from_slice(&t.x_hat);
    }
    Ok((
        Matrix::from_vec(x.rows(), k, h)?,
        Matrix::from_vec(x.rows(), d, x_hat)?,
    ))
}

/// Full objective on a batch: reconstruction MSE plus the latent L1 penalty.
pub fn evaluate_loss(p: &AutoencoderParams, x: &Matrix, lambda: f64) -> Result<LossBreakdown> {
    let (h, x_hat) = forward_batch(p, x)?;
    Ok(total_loss(
        reconstruction_loss(x, &x_hat)?,
        latent_l1(&h, lambda)?,
    ))
}

/// Same value as [`evaluate_loss`] without the finiteness checks that `Matrix` construction
/// performs. Used as a finite-difference target and for divergence detection.
pub fn objective_unchecked(p: &AutoencoderParams, x: &Matrix, lambda: f64) -> f64 {
    let mut rec = 0.0;
    let mut reg = 0.0;
    for row in x.row_iter() {
        let t = match p.forward(row) {
            Ok(t) => t,
            Err(_) => return f64::NAN,
        };
        rec += row
            .iter()
            .zip(t.x_hat.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        reg += t.h.l1_norm();
    }
    let n = x.rows() as f64;
    rec / n + if lambda == 0.0 { 0.0 } else { lambda * reg / n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_reconstruction_is_zero() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(reconstruction_loss(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn hand_norm() {
        let x = Matrix::from_rows(&[[3.0, -2.0]]).unwrap();
        let xh = Matrix::from_rows(&[[3.0, 0.0]]).unwrap();
        assert_eq!(reconstruction_loss(&x, &xh).unwrap(), 4.0);
    }

    #[test]
    fn doubling_residuals_quadruples_loss() {
        let x = Matrix::from_rows(&[[1.0, -1.0, 0.5], [0.0, 2.0, 1.0]]).unwrap();
        let a = Matrix::from_rows(&[[0.5, -0.5, 0.0], [0.25, 1.0, 1.5]]).unwrap();
        let mut b = x.clone();
        b.axpy(-2.0, &x).unwrap();
        b.axpy(2.0, &a).unwrap(); // b = x + 2 (a - x)
        let la = reconstruction_loss(&x, &a).unwrap();
        let lb = reconstruction_loss(&x, &b).unwrap();
        assert!((lb - 4.0 * la).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let x = Matrix::zeros(2, 3);
        let y = Matrix::zeros(3, 2);
        assert!(reconstruction_loss(&x, &y).is_err());
    }

    #[test]
    fn l1_zero_latents() {
        assert_eq!(latent_l1(&Matrix::zeros(4, 3), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn l1_disabled() {
        let h = Matrix::from_rows(&[[1.0, -2.0]]).unwrap();
        assert_eq!(latent_l1(&h, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn l1_hand_sums() {
        let h = Matrix::from_rows(&[[1.0, -2.0], [0.0, 3.0]]).unwrap();
        assert_eq!(latent_l1(&h, 0.5).unwrap(), 1.5);
    }

    #[test]
    fn l1_rejects_negative_lambda() {
        assert!(latent_l1(&Matrix::zeros(1, 1), -1.0).is_err());
    }

    #[test]
    fn total_is_sum() {
        assert_eq!(total_loss(0.0, 0.0).l_total, 0.0);
        assert_eq!(total_loss(2.0, 0.5).l_total, 2.5);
        let t = total_loss(0.75, 0.125);
        assert_eq!(t.l_total - t.l_rec - t.l_reg, 0.0);
    }
}
