//! Raw ETL events → fixed-width feature vectors → standardized inputs.
//!
//! Feature layout, in order:
//!
//! 1. numeric fields (`amount`, `latency_ms`, `task_duration_s`, `records_loaded`),
//!    with missing values emitted as 0;
//! 2. one one-hot block per categorical field;
//! 3. one missing-value indicator per maskable numeric field;
//! 4. `(sin, cos)` of the hour-of-day angle of the timestamp (UTC).
//!
//! With the default vocabularies (3 device types, 4 regions) this gives d = 16.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Floor applied to per-feature standard deviations.
pub const SIGMA_EPSILON: f64 = 1e-8;

const MS_PER_DAY: i64 = 86_400_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericField {
    Amount,
    LatencyMs,
    TaskDurationS,
    RecordsLoaded,
}

/// Numeric fields that can be reported missing, in `missing_mask` order.
pub const MASKABLE_FIELDS: [NumericField; 3] = [
    NumericField::Amount,
    NumericField::LatencyMs,
    NumericField::TaskDurationS,
];

impl NumericField {
    pub const ALL: [NumericField; 4] = [
        NumericField::Amount,
        NumericField::LatencyMs,
        NumericField::TaskDurationS,
        NumericField::RecordsLoaded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NumericField::Amount => "amount",
            NumericField::LatencyMs => "latency_ms",
            NumericField::TaskDurationS => "task_duration_s",
            NumericField::RecordsLoaded => "records_loaded",
        }
    }

    /// Position in `missing_mask`, if the field is maskable.
    pub fn mask_index(self) -> Option<usize> {
        MASKABLE_FIELDS.iter().position(|&f| f == self)
    }
}

impl fmt::Display for NumericField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalField {
    DeviceType,
    GeoRegion,
}

impl CategoricalField {
    pub fn name(self) -> &'static str {
        match self {
            CategoricalField::DeviceType => "device_type",
            CategoricalField::GeoRegion => "geo_region",
        }
    }
}

pub const DEFAULT_DEVICE_TYPES: [&str; 3] = ["desktop", "mobile", "server"];
pub const DEFAULT_GEO_REGIONS: [&str; 4] = ["na", "eu", "apac", "latam"];

/// One raw pipeline record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtlEvent {
    /// Epoch milliseconds.
    pub timestamp: i64,
    pub amount: f64,
    pub latency_ms: f64,
    pub task_duration_s: f64,
    pub records_loaded: u64,
    pub device_type: String,
    pub geo_region: String,
    /// One flag per entry of [`MASKABLE_FIELDS`].
    pub missing_mask: Vec<bool>,
}

impl EtlEvent {
    pub fn numeric(&self, field: NumericField) -> f64 {
        match field {
            NumericField::Amount => self.amount,
            NumericField::LatencyMs => self.latency_ms,
            NumericField::TaskDurationS => self.task_duration_s,
            NumericField::RecordsLoaded => self.records_loaded as f64,
        }
    }

    pub fn set_numeric(&mut self, field: NumericField, value: f64) {
        match field {
            NumericField::Amount => self.amount = value,
            NumericField::LatencyMs => self.latency_ms = value,
            NumericField::TaskDurationS => self.task_duration_s = value,
            NumericField::RecordsLoaded => self.records_loaded = value.max(0.0).round() as u64,
        }
    }

    pub fn categorical(&self, field: CategoricalField) -> &str {
        match field {
            CategoricalField::DeviceType => &self.device_type,
            CategoricalField::GeoRegion => &self.geo_region,
        }
    }

    pub fn is_missing(&self, field: NumericField) -> bool {
        field
            .mask_index()
            .and_then(|i| self.missing_mask.get(i).copied())
            .unwrap_or(false)
    }

    pub fn any_missing(&self) -> bool {
        self.missing_mask.iter().any(|&m| m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSpec {
    pub field: CategoricalField,
    pub values: Vec<String>,
}

/// Feature layout: which fields are encoded, in which order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub numeric: Vec<NumericField>,
    pub categorical: Vec<CategoricalSpec>,
    /// Fields carrying a missing-value indicator feature.
    pub indicators: Vec<NumericField>,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        let vocab = |vals: &[&str]| vals.iter().map(|s| s.to_string()).collect();
        FeatureSchema {
            numeric: NumericField::ALL.to_vec(),
            categorical: vec![
                CategoricalSpec {
                    field: CategoricalField::DeviceType,
                    values: vocab(&DEFAULT_DEVICE_TYPES),
                },
                CategoricalSpec {
                    field: CategoricalField::GeoRegion,
                    values: vocab(&DEFAULT_GEO_REGIONS),
                },
            ],
            indicators: MASKABLE_FIELDS.to_vec(),
        }
    }
}

impl FeatureSchema {
    pub fn dim(&self) -> usize {
        self.numeric.len()
            + self
                .categorical
                .iter()
                .map(|c| c.values.len())
                .sum::<usize>()
            + self.indicators.len()
            + 2
    }

    /// Checks that indicators are exactly the maskable numeric fields and vocabularies are sane.
    pub fn validate(&self) -> Result<()> {
        let expected: Vec<NumericField> = self
            .numeric
            .iter()
            .copied()
            .filter(|f| f.mask_index().is_some())
            .collect();
        if self.indicators != expected {
            return Err(Error::Contract(format!(
                "schema indicators {:?} must list the maskable numeric fields {:?}",
                self.indicators, expected
            )));
        }
        for spec in &self.categorical {
            if spec.values.is_empty() {
                return Err(Error::Contract(format!(
                    "categorical field {} has an empty vocabulary",
                    spec.field.name()
                )));
            }
            let mut sorted = spec.values.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != spec.values.len() {
                return Err(Error::Contract(format!(
                    "categorical field {} has duplicate values",
                    spec.field.name()
                )));
            }
        }
        Ok(())
    }

    /// Column names, one per feature slot.
    pub fn slot_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.numeric.iter().map(|f| f.name().to_string()).collect();
        for spec in &self.categorical {
            for v in &spec.values {
                names.push(format!("{}={}", spec.field.name(), v));
            }
        }
        for f in &self.indicators {
            names.push(format!("missing_{}", f.name()));
        }
        names.push("tod_sin".into());
        names.push("tod_cos".into());
        names
    }
}

/// `(sin, cos)` of the hour-of-day angle, UTC.
pub fn time_of_day_features(timestamp_ms: i64) -> (f64, f64) {
    let angle = TAU * timestamp_ms.rem_euclid(MS_PER_DAY) as f64 / MS_PER_DAY as f64;
    (angle.sin(), angle.cos())
}

pub fn vectorize(event: &EtlEvent, schema: &FeatureSchema) -> Result<Vector> {
    if event.missing_mask.len() != MASKABLE_FIELDS.len() {
        return Err(Error::Contract(format!(
            "missing_mask has {} flags, expected {}",
            event.missing_mask.len(),
            MASKABLE_FIELDS.len()
        )));
    }
    let mut out = Vec::with_capacity(schema.dim());
    for &field in &schema.numeric {
        if event.is_missing(field) {
            out.push(0.0);
            continue;
        }
        let v = event.numeric(field);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: format!("event field {field}"),
            });
        }
        if v < 0.0 && field != NumericField::Amount {
            return Err(Error::Contract(format!(
                "event field {field} is negative ({v})"
            )));
        }
        out.push(v);
    }
    for spec in &schema.categorical {
        let value = event.categorical(spec.field);
        let hot = spec
            .values
            .iter()
            .position(|v| v == value)
            .ok_or_else(|| Error::Encoding {
                field: spec.field.name().to_string(),
                value: value.to_string(),
            })?;
        out.extend((0..spec.values.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
    }
    for &field in &schema.indicators {
        out.push(if event.is_missing(field) { 1.0 } else { 0.0 });
    }
    let (s, c) = time_of_day_features(event.timestamp);
    out.push(s);
    out.push(c);
    Ok(Vector::from(out))
}

/// Vectorizes every event into the rows of a feature matrix.
pub fn vectorize_all(events: &[EtlEvent], schema: &FeatureSchema) -> Result<Matrix> {
    let d = schema.dim();
    let mut data = Vec::with_capacity(events.len() * d);
    for e in events {
        data.extend_from_slice(&vectorize(e, schema)?);
    }
    Matrix::from_vec(events.len(), d, data)
}

/// Per-feature mean and (population) standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mu: Vector,
    pub sigma: Vector,
    pub epsilon: f64,
}

impl StandardizationStats {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.sigma.len() {
            return Err(Error::dims(
                "StandardizationStats",
                self.mu.len(),
                self.sigma.len(),
            ));
        }
        if !self.mu.is_finite() || !self.sigma.is_finite() {
            return Err(Error::NonFinite {
                context: "standardization stats".into(),
            });
        }
        if let Some(s) = self.sigma.iter().find(|&&s| s < self.epsilon) {
            return Err(Error::Contract(format!(
                "sigma {s} is below the floor {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

pub fn fit_stats(x: &Matrix) -> Result<StandardizationStats> {
    if x.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "fit_stats needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    let n = x.rows() as f64;
    let mut mu = Vector::zeros(x.cols());
    for row in x.row_iter() {
        for (m, v) in mu.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mu.iter_mut() {
        *m /= n;
    }
    let mut var = Vector::zeros(x.cols());
    for row in x.row_iter() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(mu.iter()) {
            *s += (v - m) * (v - m);
        }
    }
    let sigma = var.map(|s| (s / n).sqrt().max(SIGMA_EPSILON));
    Ok(StandardizationStats {
        mu,
        sigma,
        epsilon: SIGMA_EPSILON,
    })
}

pub fn standardize(x: &[f64], stats: &StandardizationStats) -> Result<Vector> {
    if x.len() != stats.dim() {
        return Err(Error::dims("standardize", x.len(), stats.dim()));
    }
    Ok(x.iter()
        .zip(stats.mu.iter())
        .zip(stats.sigma.iter())
        .map(|((v, m), s)| (v - m) / s)
        .collect())
}

/// Row-wise [`standardize`].
pub fn standardize_matrix(x: &Matrix, stats: &StandardizationStats) -> Result<Matrix> {
    if x.cols() != stats.dim() {
        return Err(Error::dims("standardize_matrix", x.cols(), stats.dim()));
    }
    let mut out = x.clone();
    let cols = x.cols();
    for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
        let j = i % cols;
        *v = (*v - stats.mu[j]) / stats.sigma[j];
    }
    if !out.is_finite() {
        return Err(Error::NonFinite {
            context: "standardized features".into(),
        });
    }
    Ok(out)
}

/// Writes a feature matrix as CSV with one header column per schema slot.
pub fn write_feature_csv<W: Write>(
    mut w: W,
    schema: &FeatureSchema,
    x: &Matrix,
) -> std::io::Result<()> {
    writeln!(w, "{}", schema.slot_names().join(","))?;
    for row in x.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_event() -> EtlEvent {
        EtlEvent {
            timestamp: 1_704_067_200_000 + 6 * 3_600_000,
            amount: 55.0,
            latency_ms: 100.0,
            task_duration_s: 30.0,
            records_loaded: 200,
            device_type: "mobile".into(),
            geo_region: "eu".into(),
            missing_mask: vec![false; 3],
        }
    }

    #[test]
    fn default_schema_is_sixteen_wide() {
        let s = FeatureSchema::default();
        assert_eq!(s.dim(), 16);
        assert_eq!(s.slot_names().len(), 16);
        s.validate().unwrap();
    }

    #[test]
    fn no_missing_means_zero_indicators() {
        let s = FeatureSchema::default();
        let v = vectorize(&sample_event(), &s).unwrap();
        assert_eq!(&v[11..14], &[0.0, 0.0, 0.0]);
        assert_eq!(&v[..4], &[55.0, 100.0, 30.0, 200.0]);
    }

    #[test]
    fn missing_field_zeroed_with_indicator() {
        let s = FeatureSchema::default();
        let mut e = sample_event();
        e.missing_mask = vec![false, true, false];
        e.latency_ms = f64::NAN;
        let v = vectorize(&e, &s).unwrap();
        assert_eq!(v[1], 0.0);
        assert_eq!(&v[11..14], &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn categorical_change_is_local() {
        let s = FeatureSchema::default();
        let a = sample_event();
        let mut b = a.clone();
        b.device_type = "server".into();
        let va = vectorize(&a, &s).unwrap();
        let vb = vectorize(&b, &s).unwrap();
        let differing: Vec<usize> = (0..va.len()).filter(|&i| va[i] != vb[i]).collect();
        assert_eq!(differing, vec![5, 6]);
        assert!(differing.iter().all(|&i| (4..7).contains(&i)));
    }

    #[test]
    fn midnight_time_features() {
        assert_eq!(time_of_day_features(1_704_067_200_000), (0.0, 1.0));
        assert_eq!(time_of_day_features(0), (0.0, 1.0));
        let (s, c) = time_of_day_features(6 * 3_600_000);
        assert!((s - 1.0).abs() < 1e-15 && c.abs() < 1e-15);
    }

    #[test]
    fn unknown_category_names_field_and_value() {
        let mut e = sample_event();
        e.geo_region = "mars".into();
        let err = vectorize(&e, &FeatureSchema::default()).unwrap_err();
        match err {
            Error::Encoding { field, value } => {
                assert_eq!(field, "geo_region");
                assert_eq!(value, "mars");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn vectorize_is_deterministic() {
        let s = FeatureSchema::default();
        let e = sample_event();
        assert_eq!(vectorize(&e, &s).unwrap(), vectorize(&e, &s).unwrap());
    }

    #[test]
    fn bad_mask_length() {
        let mut e = sample_event();
        e.missing_mask = vec![false; 2];
        assert!(vectorize(&e, &FeatureSchema::default()).is_err());
    }

    #[test]
    fn stats_of_two_four_six() {
        let x = Matrix::from_rows(&[[2.0], [4.0], [6.0]]).unwrap();
        let st = fit_stats(&x).unwrap();
        assert_eq!(st.mu[0], 4.0);
        assert!((st.sigma[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((st.sigma[0] - 1.63299).abs() < 1e-5);
    }

    #[test]
    fn constant_column_is_floored() {
        let x = Matrix::from_rows(&[[5.0], [5.0], [5.0]]).unwrap();
        let st = fit_stats(&x).unwrap();
        assert_eq!(st.mu[0], 5.0);
        assert_eq!(st.sigma[0], SIGMA_EPSILON);
    }

    #[test]
    fn already_standardized_column() {
        let col = [-1.5, -0.5, 0.5, 1.5];
        let mean = 0.0;
        let pop_std = (col.iter().map(|v: &f64| v * v).sum::<f64>() / 4.0).sqrt();
        let rows: Vec<[f64; 1]> = col.iter().map(|v| [(v - mean) / pop_std]).collect();
        let st = fit_stats(&Matrix::from_rows(&rows).unwrap()).unwrap();
        assert!(st.mu[0].abs() < 1e-9);
        assert!((st.sigma[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_needs_two_rows() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(fit_stats(&x), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn standardize_centering_and_scaling() {
        let st = StandardizationStats {
            mu: vec![1.0, -2.0, 10.0].into(),
            sigma: vec![2.0, 0.5, 3.0].into(),
            epsilon: SIGMA_EPSILON,
        };
        assert_eq!(&*standardize(&st.mu, &st).unwrap(), &[0.0, 0.0, 0.0]);
        let shifted: Vec<f64> = st
            .mu
            .iter()
            .zip(st.sigma.iter())
            .map(|(m, s)| m + s)
            .collect();
        assert_eq!(&*standardize(&shifted, &st).unwrap(), &[1.0, 1.0, 1.0]);
        assert!(standardize(&[1.0], &st).is_err());
    }

    #[test]
    fn own_stats_standardize_to_unit() {
        let x = Matrix::from_rows(&[[2.0], [4.0], [6.0]]).unwrap();
        let st = fit_stats(&x).unwrap();
        let z = standardize_matrix(&x, &st).unwrap().column(0);
        let mean = z.iter().sum::<f64>() / 3.0;
        let std = (z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0).sqrt();
        assert!(mean.abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_header_names_slots() {
        let s = FeatureSchema::default();
        let x = vectorize_all(&[sample_event()], &s).unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &s, &x).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header
            .starts_with("amount,latency_ms,task_duration_s,records_loaded,device_type=desktop"));
        assert!(header.ends_with("missing_task_duration_s,tod_sin,tod_cos"));
        assert_eq!(text.lines().count(), 2);
    }
}
