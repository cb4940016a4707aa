use crate::error::{Error, Result};
use crate::numerics::{matvec_t, Matrix};

use super::params::{AutoencoderParams, Gradients};

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Exact gradient of `mean_i ‖x_i − x̂_i‖² + λ · mean_i ‖h_i‖₁` over the rows of `x`.
///
/// The L1 term uses subgradient 0 at `h = 0`; relu uses derivative 0 at its kink.
/// Per-sample contributions are accumulated sequentially in row order.
pub fn backprop(p: &AutoencoderParams, x: &Matrix, lambda: f64) -> Result<Gradients> {
    if x.rows() == 0 {
        return Err(Error::InsufficientData("backprop on an empty batch".into()));
    }
    if x.cols() != p.input_dim() {
        return Err(Error::dims(
            "backprop",
            format!("d={}", p.input_dim()),
            x.shape_string(),
        ));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Contract(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let inv_n = 1.0 / x.rows() as f64;
    let act = p.activations;
    let mut g = Gradients::zeros_like(p);

    for row in x.row_iter() {
        let t = p.forward(row)?;
        // ∂L/∂z_out = (2/N)(x̂ − x) ⊙ output'(z_out)
        let d_out: Vec<f64> = t
            .x_hat
            .iter()
            .zip(row)
            .zip(t.z_out.iter())
            .map(|((xh, xi), z)| 2.0 * inv_n * (xh - xi) * act.output.derivative(*z))
            .collect();
        g.w_d.add_outer(1.0, &d_out, &t.h)?;
        for (b, d) in g.b_d.iter_mut().zip(&d_out) {
            *b += d;
        }

        let mut d_h = matvec_t(&p.w_d, &d_out)?;
        if lambda != 0.0 {
            for (dh, h) in d_h.iter_mut().zip(t.h.iter()) {
                *dh += lambda * inv_n * sign(*h);
            }
        }
        let d_hidden: Vec<f64> = d_h
            .iter()
            .zip(t.z_hidden.iter())
            .map(|(dh, z)| dh * act.hidden.derivative(*z))
            .collect();
        g.w_e.add_outer(1.0, &d_hidden, row)?;
        for (b, d) in g.b_e.iter_mut().zip(&d_hidden) {
            *b += d;
        }
    }

    if let Some(block) = g.first_non_finite_block() {
        return Err(Error::NonFinite {
            context: format!("gradient block {block}"),
        });
    }
    Ok(g)
}
