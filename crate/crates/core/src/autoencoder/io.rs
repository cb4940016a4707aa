//! Model document: a JSON file carrying the trained parameters together with the
//! standardization stats and the feature schema they were fit against.
//!
//! Floats are written in shortest round-trip form and parsed with correctly
//! rounded conversion, so save → load → save is byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use crate::error::{Error, LoadError, Result};
use crate::numerics::{Matrix, Vector};
use crate::preprocess::{FeatureSchema, StandardizationStats};

use super::params::{Activations, AutoencoderParams};

pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to score raw events.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub params: AutoencoderParams,
    pub stats: StandardizationStats,
    pub schema: FeatureSchema,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    d: usize,
    k: usize,
    activations: Activations,
    w_e: Vec<Vec<f64>>,
    b_e: Vec<f64>,
    w_d: Vec<Vec<f64>>,
    b_d: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    sigma_epsilon: f64,
    schema: FeatureSchema,
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.to_vec()).collect()
}

fn shape_err(msg: impl Into<String>) -> Error {
    LoadError::Shape(msg.into()).into()
}

fn matrix_from(name: &str, rows: &[Vec<f64>], expect: (usize, usize)) -> Result<Matrix> {
    if rows.len() != expect.0 {
        return Err(shape_err(format!(
            "{name} has {} rows, expected {}",
            rows.len(),
            expect.0
        )));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != expect.1) {
        return Err(shape_err(format!(
            "{name} row {i} has {} columns, expected {}",
            r.len(),
            expect.1
        )));
    }
    Matrix::from_rows(rows).map_err(|e| shape_err(format!("{name}: {e}")))
}

fn check_len(name: &str, v: &[f64], expect: usize) -> Result<()> {
    if v.len() != expect {
        return Err(shape_err(format!(
            "{name} has {} entries, expected {expect}",
            v.len()
        )));
    }
    Ok(())
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.stats.validate()?;
        self.schema.validate()?;
        let d = self.params.input_dim();
        if self.stats.dim() != d || self.schema.dim() != d {
            return Err(Error::dims(
                "Model",
                format!("params d={d}"),
                format!(
                    "stats d={}, schema d={}",
                    self.stats.dim(),
                    self.schema.dim()
                ),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let doc = ModelDocument {
            format_version: FORMAT_VERSION,
            d: self.params.input_dim(),
            k: self.params.latent_dim(),
            activations: self.params.activations,
            w_e: rows_of(&self.params.w_e),
            b_e: self.params.b_e.to_vec(),
            w_d: rows_of(&self.params.w_d),
            b_d: self.params.b_d.to_vec(),
            mu: self.stats.mu.to_vec(),
            sigma: self.stats.sigma.to_vec(),
            sigma_epsilon: self.stats.epsilon,
            schema: self.schema.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::Contract(format!("model serialization failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| match e.classify() {
                Category::Eof => LoadError::Truncated(e.to_string()),
                _ => LoadError::Malformed(e.to_string()),
            })?;
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| LoadError::Malformed("missing integer field `format_version`".into()))?;
        if found != FORMAT_VERSION as u64 {
            return Err(LoadError::Version {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            }
            .into());
        }
        let doc: ModelDocument =
            serde_json::from_value(value).map_err(|e| LoadError::Malformed(e.to_string()))?;

        let (d, k) = (doc.d, doc.k);
        if d == 0 || k == 0 {
            return Err(shape_err(format!(
                "d and k must be positive, got d={d}, k={k}"
            )));
        }
        let w_e = matrix_from("w_e", &doc.w_e, (k, d))?;
        let w_d = matrix_from("w_d", &doc.w_d, (d, k))?;
        check_len("b_e", &doc.b_e, k)?;
        check_len("b_d", &doc.b_d, d)?;
        check_len("mu", &doc.mu, d)?;
        check_len("sigma", &doc.sigma, d)?;
        if doc.schema.dim() != d {
            return Err(shape_err(format!(
                "schema describes {} features, model has d={d}",
                doc.schema.dim()
            )));
        }
        let model = Model {
            params: AutoencoderParams {
                w_e,
                b_e: Vector::from(doc.b_e),
                w_d,
                b_d: Vector::from(doc.b_d),
                activations: doc.activations,
            },
            stats: StandardizationStats {
                mu: Vector::from(doc.mu),
                sigma: Vector::from(doc.sigma),
                epsilon: doc.sigma_epsilon,
            },
            schema: doc.schema,
        };
        model
            .validate()
            .map_err(|e| LoadError::Malformed(e.to_string()))?;
        Ok(model)
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let text = model.to_json()?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Model::from_json(&text)
}
