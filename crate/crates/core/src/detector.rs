//! Reconstruction-error scoring and threshold classification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{AutoencoderParams, Model};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::preprocess::{standardize, vectorize, EtlEvent, StandardizationStats};
use crate::records::ErrorRecord;

pub const DEFAULT_QUANTILE: f64 = 0.95;

/// Squared reconstruction error `‖x − x̂‖²` of one standardized sample.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnomalyScore(pub f64);

impl AnomalyScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub delta: f64,
    pub calibration_quantile: f64,
}

impl DetectorConfig {
    pub fn new(delta: f64) -> Result<Self> {
        let cfg = DetectorConfig {
            delta,
            calibration_quantile: DEFAULT_QUANTILE,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) {
            return Err(Error::Contract(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        check_quantile(self.calibration_quantile)
    }
}

fn check_quantile(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Contract(format!(
            "quantile must be in (0, 1), got {q}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub event_id: u64,
    pub score: f64,
    pub is_anomaly: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_label: Option<bool>,
}

/// One line of detection output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StreamOutcome {
    Detection(DetectionResult),
    Error(ErrorRecord),
}

/// One event of a stream to score, or a record that already failed upstream.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamInput {
    pub event_id: u64,
    pub event: EtlEvent,
    pub truth_label: Option<bool>,
}

pub type StreamItem = std::result::Result<StreamInput, ErrorRecord>;

/// Reconstruction error of an already-standardized row.
pub fn score_standardized(params: &AutoencoderParams, x_std: &[f64]) -> Result<AnomalyScore> {
    let t = params.forward(x_std)?;
    let s = t.x_hat.squared_distance(&x_std.to_vec().into())?;
    if !s.is_finite() {
        return Err(Error::NonFinite {
            context: "anomaly score".into(),
        });
    }
    Ok(AnomalyScore(s))
}

/// Standardize, encode, decode, and measure the squared distance.
pub fn score(
    params: &AutoencoderParams,
    stats: &StandardizationStats,
    x_raw: &[f64],
) -> Result<AnomalyScore> {
    if x_raw.len() != params.input_dim() {
        return Err(Error::dims(
            "score",
            format!("d={}", params.input_dim()),
            x_raw.len(),
        ));
    }
    score_standardized(params, &standardize(x_raw, stats)?)
}

/// Scores every row of a standardized matrix. Rows are scored in parallel; order is kept.
pub fn score_matrix(params: &AutoencoderParams, x_std: &Matrix) -> Result<Vec<f64>> {
    (0..x_std.rows())
        .into_par_iter()
        .map(|i| score_standardized(params, x_std.row(i)).map(AnomalyScore::value))
        .collect()
}

/// Nearest-rank empirical quantile: the `⌈q·n⌉`-th smallest score.
pub fn calibrate_threshold(scores: &[f64], q: f64) -> Result<f64> {
    check_quantile(q)?;
    if scores.is_empty() {
        return Err(Error::InsufficientData(
            "cannot calibrate on zero scores".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite {
            context: "calibration scores".into(),
        });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let raw = q * n as f64;
    // q·n like 0.95·100 can land a hair above an integer in binary
    let nearest = raw.round();
    let rank = if (raw - nearest).abs() <= 1e-9 * n as f64 {
        nearest
    } else {
        raw.ceil()
    };
    let rank = (rank as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Strict `score > delta`.
pub fn classify(score: AnomalyScore, delta: f64) -> bool {
    score.0 > delta
}

/// Scores a stream. Output order matches input order; failed items become error records.
pub fn score_stream(
    model: &Model,
    items: &[StreamItem],
    cfg: &DetectorConfig,
) -> Vec<StreamOutcome> {
    items
        .par_iter()
        .map(|item| {
            let input = match item {
                Ok(input) => input,
                Err(rec) => return StreamOutcome::Error(rec.clone()),
            };
            let scored = vectorize(&input.event, &model.schema)
                .and_then(|x| score(&model.params, &model.stats, &x));
            match scored {
                Ok(s) => StreamOutcome::Detection(DetectionResult {
                    event_id: input.event_id,
                    score: s.value(),
                    is_anomaly: classify(s, cfg.delta),
                    truth_label: input.truth_label,
                }),
                Err(e) => StreamOutcome::Error(ErrorRecord {
                    event_id: input.event_id,
                    error: e.to_string(),
                }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{ActivationKind, Activations};
    use crate::numerics::Vector;
    use crate::preprocess::{FeatureSchema, SIGMA_EPSILON};
    use crate::streamgen::{generate, StreamConfig};

    fn linear() -> Activations {
        Activations {
            hidden: ActivationKind::Identity,
            output: ActivationKind::Identity,
        }
    }

    fn unit_stats(d: usize) -> StandardizationStats {
        StandardizationStats {
            mu: Vector::zeros(d),
            sigma: Vector::filled(d, 1.0),
            epsilon: SIGMA_EPSILON,
        }
    }

    fn identity_model(d: usize) -> AutoencoderParams {
        AutoencoderParams::new(
            Matrix::identity(d),
            Vector::zeros(d),
            Matrix::identity(d),
            Vector::zeros(d),
            linear(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_model_scores_zero() {
        let p = identity_model(3);
        let s = score(&p, &unit_stats(3), &[4.0, -1.0, 0.25]).unwrap();
        assert_eq!(s.value(), 0.0);
    }

    #[test]
    fn hand_built_score_is_four() {
        // encoder sums both coordinates, decoder writes the code to the first slot only
        let p = AutoencoderParams::new(
            Matrix::from_rows(&[[1.0, 1.0]]).unwrap(),
            vec![2.0].into(),
            Matrix::from_rows(&[[1.0], [0.0]]).unwrap(),
            vec![0.0, 0.0].into(),
            linear(),
        )
        .unwrap();
        // x_std = [3, -2] → h = 3 → x̂ = [3, 0]
        let stats = StandardizationStats {
            mu: vec![1.0, 0.0].into(),
            sigma: vec![2.0, 1.0].into(),
            epsilon: SIGMA_EPSILON,
        };
        let s = score(&p, &stats, &[7.0, -2.0]).unwrap();
        assert_eq!(s.value(), 4.0);
    }

    #[test]
    fn score_dimension_mismatch() {
        assert!(score(&identity_model(3), &unit_stats(3), &[1.0]).is_err());
    }

    #[test]
    fn nearest_rank_quantile() {
        let scores: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(calibrate_threshold(&scores, 0.95).unwrap(), 95.0);
        assert_eq!(calibrate_threshold(&[3.5], 0.01).unwrap(), 3.5);
        assert_eq!(calibrate_threshold(&[3.5], 0.99).unwrap(), 3.5);
        assert_eq!(calibrate_threshold(&[2.0; 17], 0.3).unwrap(), 2.0);
        // 0.07 * 100 = 7.000000000000001 in binary
        assert_eq!(calibrate_threshold(&scores, 0.07).unwrap(), 7.0);
        assert_eq!(calibrate_threshold(&scores, 0.071).unwrap(), 8.0);
    }

    #[test]
    fn calibrate_errors() {
        assert!(matches!(
            calibrate_threshold(&[], 0.5),
            Err(Error::InsufficientData(_))
        ));
        assert!(calibrate_threshold(&[1.0], 0.0).is_err());
        assert!(calibrate_threshold(&[1.0], 1.0).is_err());
    }

    #[test]
    fn classify_is_strict() {
        assert!(!classify(AnomalyScore(0.0), 0.0));
        assert!(classify(AnomalyScore(5.0), 4.0));
        assert!(!classify(AnomalyScore(4.0), 4.0));
    }

    fn stream_model() -> Model {
        let schema = FeatureSchema::default();
        let d = schema.dim();
        Model {
            params: identity_model(d),
            stats: unit_stats(d),
            schema,
        }
    }

    fn stream_items(n: usize, seed: u64) -> Vec<StreamItem> {
        let cfg = StreamConfig {
            n_events: n,
            anomaly_rate: 0.1,
            seed,
            ..StreamConfig::default()
        };
        generate(&cfg)
            .unwrap()
            .into_iter()
            .map(|e| {
                Ok(StreamInput {
                    event_id: e.event_id,
                    event: e.event,
                    truth_label: Some(e.label),
                })
            })
            .collect()
    }

    #[test]
    fn empty_stream() {
        let out = score_stream(&stream_model(), &[], &DetectorConfig::new(1.0).unwrap());
        assert!(out.is_empty());
    }

    #[test]
    fn streams_concatenate() {
        let mut model = stream_model();
        // shrink the decoder so scores are non-trivial
        for v in model.params.w_d.as_mut_slice() {
            *v *= 0.5;
        }
        let cfg = DetectorConfig::new(100.0).unwrap();
        let a = stream_items(40, 1);
        let b = stream_items(25, 2);
        let joined: Vec<StreamItem> = a.iter().chain(&b).cloned().collect();
        let mut separate = score_stream(&model, &a, &cfg);
        separate.extend(score_stream(&model, &b, &cfg));
        assert_eq!(score_stream(&model, &joined, &cfg), separate);
    }

    #[test]
    fn unknown_category_yields_error_record() {
        let mut items = stream_items(10, 3);
        if let Ok(input) = &mut items[4] {
            input.event.device_type = "toaster".into();
        }
        let out = score_stream(&stream_model(), &items, &DetectorConfig::new(1.0).unwrap());
        assert_eq!(out.len(), 10);
        let errors: Vec<_> = out
            .iter()
            .filter_map(|o| match o {
                StreamOutcome::Error(e) => Some(e),
                _ => None,
            })
            .collect();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].event_id, 4);
        assert!(errors[0].error.contains("toaster"));
    }

    #[test]
    fn outcome_serializes_flat() {
        let d = StreamOutcome::Detection(DetectionResult {
            event_id: 3,
            score: 1.5,
            is_anomaly: true,
            truth_label: None,
        });
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"event_id":3,"score":1.5,"is_anomaly":true}"#
        );
        let back: StreamOutcome = serde_json::from_str(r#"{"event_id":3,"error":"bad"}"#).unwrap();
        assert!(matches!(back, StreamOutcome::Error(_)));
    }
}

#[cfg(test)]
mod proptests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn threshold_monotone_in_q(
            scores in prop::collection::vec(0.0f64..100.0, 1..60),
            q1 in 0.01f64..0.99,
            q2 in 0.01f64..0.99,
        ) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(calibrate_threshold(&scores, lo).unwrap() <= calibrate_threshold(&scores, hi).unwrap());
        }

        #[test]
        fn raising_delta_never_flags_more(s in 0.0f64..10.0, d1 in 0.0f64..10.0, d2 in 0.0f64..10.0) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(!classify(AnomalyScore(s), hi) || classify(AnomalyScore(s), lo));
        }

        #[test]
        fn quantile_bounds_fraction_flagged(
            scores in prop::collection::vec(0.0f64..100.0, 1..200),
            q in 0.5f64..0.99,
        ) {
            let delta = calibrate_threshold(&scores, q).unwrap();
            let flagged = scores.iter().filter(|&&s| classify(AnomalyScore(s), delta)).count();
            let n = scores.len() as f64;
            prop_assert!(flagged as f64 <= (1.0 - q) * n + 1e-9 * n);
        }
    }
}
