use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::preprocess::{
    fit_stats, standardize_matrix, vectorize_all, EtlEvent, FeatureSchema, StandardizationStats,
};
use crate::streamgen::{generate, AnomalyClass, ClassMix, LabeledEvent, StreamConfig};

/// Chronological split fractions; the test split takes the remainder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.6,
            validation: 0.2,
        }
    }
}

/// Standardized train / validation / test matrices sharing one set of stats.
///
/// `train` and `validation` hold only normal-labeled events; `test` holds everything
/// in its time window.
#[derive(Clone, Debug)]
pub struct DataBundle {
    pub schema: FeatureSchema,
    pub stats: StandardizationStats,
    pub train: Matrix,
    pub validation: Matrix,
    pub test: Matrix,
    pub test_labels: Vec<bool>,
    pub test_classes: Vec<Option<AnomalyClass>>,
}

impl DataBundle {
    pub fn dim(&self) -> usize {
        self.schema.dim()
    }

    /// Splits a labeled stream in time order and fits stats on the training normals.
    pub fn from_events(
        events: &[LabeledEvent],
        schema: &FeatureSchema,
        split: SplitFractions,
    ) -> Result<Self> {
        if !(split.train > 0.0 && split.validation > 0.0 && split.train + split.validation < 1.0) {
            return Err(Error::Contract(format!(
                "invalid split fractions {split:?}"
            )));
        }
        let n = events.len();
        let n_train = (n as f64 * split.train).round() as usize;
        let n_val = (n as f64 * split.validation).round() as usize;
        let (train_part, rest) = events.split_at(n_train.min(n));
        let (val_part, test_part) = rest.split_at(n_val.min(rest.len()));

        let normals = |part: &[LabeledEvent]| -> Vec<EtlEvent> {
            part.iter()
                .filter(|e| !e.label)
                .map(|e| e.event.clone())
                .collect()
        };
        let raw_train = vectorize_all(&normals(train_part), schema)?;
        let raw_val = vectorize_all(&normals(val_part), schema)?;
        let test_events: Vec<EtlEvent> = test_part.iter().map(|e| e.event.clone()).collect();
        let raw_test = vectorize_all(&test_events, schema)?;
        if raw_val.rows() == 0 || raw_test.rows() == 0 {
            return Err(Error::InsufficientData(format!(
                "split of {n} events leaves an empty validation or test set"
            )));
        }

        let stats = fit_stats(&raw_train)?;
        Ok(DataBundle {
            schema: schema.clone(),
            train: standardize_matrix(&raw_train, &stats)?,
            validation: standardize_matrix(&raw_val, &stats)?,
            test: standardize_matrix(&raw_test, &stats)?,
            test_labels: test_part.iter().map(|e| e.label).collect(),
            test_classes: test_part.iter().map(|e| e.anomaly_class).collect(),
            stats,
        })
    }
}

/// The reference workload: 10 000 events, 5% anomalies, equal class mix, 60/20/20 split.
pub fn standard_stream_config(seed: u64) -> StreamConfig {
    StreamConfig {
        n_events: 10_000,
        anomaly_rate: 0.05,
        mix: ClassMix::default(),
        seed,
        ..StreamConfig::default()
    }
}

pub fn standard_benchmark(seed: u64) -> Result<DataBundle> {
    let events = generate(&standard_stream_config(seed))?;
    DataBundle::from_events(
        &events,
        &FeatureSchema::default(),
        SplitFractions::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_split_sizes() {
        let b = standard_benchmark(7).unwrap();
        assert_eq!(b.dim(), 16);
        assert_eq!(b.test.rows(), 2000);
        assert_eq!(b.test_labels.len(), 2000);
        assert!(b.train.rows() > 5500 && b.train.rows() < 6000);
        assert!(b.validation.rows() > 1800 && b.validation.rows() < 2000);
        assert!(b.test_labels.iter().any(|&l| l));
    }

    #[test]
    fn train_split_is_standardized() {
        let b = standard_benchmark(3).unwrap();
        for j in 0..b.dim() {
            let col = b.train.column(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9, "column {j} mean {mean}");
        }
    }

    #[test]
    fn bad_split_rejected() {
        let events = generate(&StreamConfig {
            n_events: 100,
            ..StreamConfig::default()
        })
        .unwrap();
        let bad = SplitFractions {
            train: 0.8,
            validation: 0.3,
        };
        assert!(DataBundle::from_events(&events, &FeatureSchema::default(), bad).is_err());
    }
}
