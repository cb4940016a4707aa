use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{matvec, Matrix, SeededRng, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Identity,
        ActivationKind::Tanh,
        ActivationKind::Relu,
        ActivationKind::Sigmoid,
    ];

    pub fn apply(self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity => z,
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative with respect to the pre-activation `z`. Relu uses 0 at the kink.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity => 1.0,
            ActivationKind::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sigmoid => {
                let s = self.apply(z);
                s * (1.0 - s)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActivationKind::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown activation `{s}`")))
    }
}

/// Hidden and output activations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activations {
    pub hidden: ActivationKind,
    pub output: ActivationKind,
}

impl Default for Activations {
    fn default() -> Self {
        Activations {
            hidden: ActivationKind::Tanh,
            output: ActivationKind::Identity,
        }
    }
}

/// Single-hidden-layer autoencoder.
///
/// `h = hidden(w_e·x + b_e)`, `x̂ = output(w_d·h + b_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderParams {
    pub w_e: Matrix,
    pub b_e: Vector,
    pub w_d: Matrix,
    pub b_d: Vector,
    pub activations: Activations,
}

/// Same layout as [`AutoencoderParams`], holding `∂L/∂θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w_e: Matrix,
    pub b_e: Vector,
    pub w_d: Matrix,
    pub b_d: Vector,
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub z_hidden: Vector,
    pub h: Vector,
    pub z_out: Vector,
    pub x_hat: Vector,
}

impl AutoencoderParams {
    /// Assembles parameters after checking shapes and finiteness.
    pub fn new(
        w_e: Matrix,
        b_e: Vector,
        w_d: Matrix,
        b_d: Vector,
        activations: Activations,
    ) -> Result<Self> {
        let p = AutoencoderParams {
            w_e,
            b_e,
            w_d,
            b_d,
            activations,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn input_dim(&self) -> usize {
        self.w_e.cols()
    }

    pub fn latent_dim(&self) -> usize {
        self.w_e.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (k, d) = self.w_e.shape();
        if k == 0 || d == 0 {
            return Err(Error::Contract(format!(
                "w_e must be non-empty, got {k}x{d}"
            )));
        }
        if self.b_e.len() != k {
            return Err(Error::dims("b_e", format!("k={k}"), self.b_e.len()));
        }
        if self.w_d.shape() != (d, k) {
            return Err(Error::dims(
                "w_d",
                format!("{d}x{k}"),
                self.w_d.shape_string(),
            ));
        }
        if self.b_d.len() != d {
            return Err(Error::dims("b_d", format!("d={d}"), self.b_d.len()));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite {
                context: "autoencoder parameters".into(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w_e.is_finite() && self.b_e.is_finite() && self.w_d.is_finite() && self.b_d.is_finite()
    }

    pub fn num_params(&self) -> usize {
        2 * self.w_e.rows() * self.w_e.cols() + self.b_e.len() + self.b_d.len()
    }

    /// All parameters in the order `w_e, b_e, w_d, b_d`, row-major.
    pub fn to_flat(&self) -> Vector {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend_from_slice(self.w_e.as_slice());
        v.extend_from_slice(&self.b_e);
        v.extend_from_slice(self.w_d.as_slice());
        v.extend_from_slice(&self.b_d);
        v.into()
    }

    /// Inverse of [`to_flat`](Self::to_flat), reusing this instance's shapes.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return Err(Error::dims("with_flat", self.num_params(), flat.len()));
        }
        let (k, d) = self.w_e.shape();
        let (a, rest) = flat.split_at(k * d);
        let (b, rest) = rest.split_at(k);
        let (c, e) = rest.split_at(d * k);
        Ok(AutoencoderParams {
            w_e: Matrix::from_vec(k, d, a.to_vec())?,
            b_e: b.to_vec().into(),
            w_d: Matrix::from_vec(d, k, c.to_vec())?,
            b_d: e.to_vec().into(),
            activations: self.activations,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::dims(
                "encode",
                format!("d={}", self.input_dim()),
                x.len(),
            ));
        }
        let mut z_hidden = matvec(&self.w_e, x)?;
        for (z, b) in z_hidden.iter_mut().zip(self.b_e.iter()) {
            *z += b;
        }
        let h = z_hidden.map(|z| self.activations.hidden.apply(z));
        let mut z_out = matvec(&self.w_d, &h)?;
        for (z, b) in z_out.iter_mut().zip(self.b_d.iter()) {
            *z += b;
        }
        let x_hat = z_out.map(|z| self.activations.output.apply(z));
        Ok(ForwardTrace {
            z_hidden,
            h,
            z_out,
            x_hat,
        })
    }
}

impl Gradients {
    pub fn zeros_like(p: &AutoencoderParams) -> Self {
        Gradients {
            w_e: Matrix::zeros(p.w_e.rows(), p.w_e.cols()),
            b_e: Vector::zeros(p.b_e.len()),
            w_d: Matrix::zeros(p.w_d.rows(), p.w_d.cols()),
            b_d: Vector::zeros(p.b_d.len()),
        }
    }

    pub fn to_flat(&self) -> Vector {
        let mut v = Vec::new();
        v.extend_from_slice(self.w_e.as_slice());
        v.extend_from_slice(&self.b_e);
        v.extend_from_slice(self.w_d.as_slice());
        v.extend_from_slice(&self.b_d);
        v.into()
    }

    /// Name of the first block holding a non-finite entry.
    pub fn first_non_finite_block(&self) -> Option<&'static str> {
        if !self.w_e.is_finite() {
            Some("w_e")
        } else if !self.b_e.is_finite() {
            Some("b_e")
        } else if !self.w_d.is_finite() {
            Some("w_d")
        } else if !self.b_d.is_finite() {
            Some("b_d")
        } else {
            None
        }
    }
}

fn glorot_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.draw_uniform(-bound, bound).expect("bound > 0"))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("shape matches")
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(
    d: usize,
    k: usize,
    activations: Activations,
    rng: &mut SeededRng,
) -> Result<AutoencoderParams> {
    if d == 0 || k == 0 {
        return Err(Error::Contract(format!(
            "init_params needs d >= 1 and k >= 1, got d={d}, k={k}"
        )));
    }
    let w_e = glorot_matrix(k, d, rng);
    let w_d = glorot_matrix(d, k, rng);
    Ok(AutoencoderParams {
        w_e,
        b_e: Vector::zeros(k),
        w_d,
        b_d: Vector::zeros(d),
        activations,
    })
}

/// Latent code `h` for one standardized input.
pub fn encode(p: &AutoencoderParams, x_std: &[f64]) -> Result<Vector> {
    if x_std.len() != p.input_dim() {
        return Err(Error::dims(
            "encode",
            format!("d={}", p.input_dim()),
            x_std.len(),
        ));
    }
    let mut z = matvec(&p.w_e, x_std)?;
    for (zi, b) in z.iter_mut().zip(p.b_e.iter()) {
        *zi = p.activations.hidden.apply(*zi + b);
    }
    Ok(z)
}

/// Reconstruction `x̂` from a latent code.
pub fn decode(p: &AutoencoderParams, h: &[f64]) -> Result<Vector> {
    if h.len() != p.latent_dim() {
        return Err(Error::dims(
            "decode",
            format!("k={}", p.latent_dim()),
            h.len(),
        ));
    }
    let mut z = matvec(&p.w_d, h)?;
    for (zi, b) in z.iter_mut().zip(p.b_d.iter()) {
        *zi = p.activations.output.apply(*zi + b);
    }
    Ok(z)
}
