use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// `None` when nothing was predicted anomalous.
    pub fn precision(&self) -> Option<f64> {
        let denom = self.tp + self.fp;
        (denom > 0).then(|| self.tp as f64 / denom as f64)
    }

    /// `None` when there are no true anomalies.
    pub fn recall(&self) -> Option<f64> {
        let denom = self.tp + self.fn_;
        (denom > 0).then(|| self.tp as f64 / denom as f64)
    }
}

/// Threshold metrics plus the threshold-free AUC.
///
/// `precision`/`recall` are `None` when their denominator is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub acc: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub confusion: Confusion,
    pub n: usize,
    pub delta_used: f64,
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::dims("metrics", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite {
            context: "metric scores".into(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "need both classes, got {pos} anomalies and {neg} normals"
        )));
    }
    Ok((pos, neg))
}

/// Probability that a random anomaly outscores a random normal, ties counting one half.
///
/// Computed from the rank sum of the anomalies, with tied scores sharing their average rank.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end+1 share their mean
        let avg_rank = (start + end + 2) as f64 / 2.0;
        let tied_pos = order[start..=end].iter().filter(|&&i| labels[i]).count();
        pos_rank_sum += avg_rank * tied_pos as f64;
        start = end + 1;
    }
    let u = pos_rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Confusion counts with "anomaly" predicted iff `score > delta`.
pub fn confusion_at(scores: &[f64], labels: &[bool], delta: f64) -> Result<Confusion> {
    if scores.len() != labels.len() {
        return Err(Error::dims("confusion_at", scores.len(), labels.len()));
    }
    let mut c = Confusion::default();
    for (&s, &truth) in scores.iter().zip(labels) {
        match (s > delta, truth) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn metrics_at_threshold(scores: &[f64], labels: &[bool], delta: f64) -> Result<MetricsReport> {
    check_inputs(scores, labels)?;
    let confusion = confusion_at(scores, labels, delta)?;
    Ok(MetricsReport {
        auc: auc(scores, labels)?,
        acc: confusion.accuracy(),
        precision: confusion.precision(),
        recall: confusion.recall(),
        confusion,
        n: scores.len(),
        delta_used: delta,
    })
}

/// Metrics from already-made verdicts (for detection files).
pub fn metrics_from_verdicts(
    scores: &[f64],
    verdicts: &[bool],
    labels: &[bool],
    delta: f64,
) -> Result<MetricsReport> {
    check_inputs(scores, labels)?;
    if verdicts.len() != labels.len() {
        return Err(Error::dims(
            "metrics_from_verdicts",
            verdicts.len(),
            labels.len(),
        ));
    }
    let mut c = Confusion::default();
    for (&v, &truth) in verdicts.iter().zip(labels) {
        match (v, truth) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(MetricsReport {
        auc: auc(scores, labels)?,
        acc: c.accuracy(),
        precision: c.precision(),
        recall: c.recall(),
        confusion: c,
        n: scores.len(),
        delta_used: delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: enumerate every (anomaly, normal) pair.
    fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in (0..scores.len()).filter(|&i| labels[i]) {
            for j in (0..scores.len()).filter(|&j| !labels[j]) {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn worked_example() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let l = [false, false, true, true];
        assert_eq!(brute_force_auc(&s, &l), 0.75);
        assert_eq!(auc(&s, &l).unwrap(), 0.75);
    }

    #[test]
    fn separated_and_tied() {
        assert_eq!(
            auc(&[1.0, 2.0, 3.0, 4.0], &[false, false, true, true]).unwrap(),
            1.0
        );
        assert_eq!(
            auc(&[2.0; 6], &[true, false, true, false, false, true]).unwrap(),
            0.5
        );
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            auc(&[1.0, 2.0], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            auc(&[1.0, 2.0], &[false, false]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn delta_below_everything() {
        let m = metrics_at_threshold(&[1.0, 2.0, 3.0], &[false, true, true], 0.5).unwrap();
        assert_eq!(m.recall, Some(1.0));
    }

    #[test]
    fn delta_above_everything() {
        let m = metrics_at_threshold(&[1.0, 2.0, 3.0], &[false, true, true], 10.0).unwrap();
        assert_eq!(m.confusion.tp, 0);
        assert_eq!(m.confusion.fp, 0);
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
    }

    #[test]
    fn hand_confusion_table() {
        let m =
            metrics_at_threshold(&[1.0, 2.0, 3.0, 4.0], &[false, false, true, true], 2.5).unwrap();
        assert_eq!(
            m.confusion,
            Confusion {
                tp: 2,
                fp: 0,
                tn: 2,
                fn_: 0
            }
        );
        assert_eq!(m.acc, 1.0);
        assert_eq!(m.n, 4);
        assert_eq!(m.delta_used, 2.5);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            metrics_at_threshold(&[1.0, 2.0], &[true], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn equality_at_threshold_is_normal() {
        let c = confusion_at(&[2.0, 2.0], &[true, false], 2.0).unwrap();
        assert_eq!(
            c,
            Confusion {
                tp: 0,
                fp: 0,
                tn: 1,
                fn_: 1
            }
        );
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        fn scored_labels(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
            (2..=max).prop_flat_map(|n| {
                (
                    // small integer grid so ties are common
                    prop::collection::vec((0i32..6).prop_map(f64::from), n),
                    prop::collection::vec(any::<bool>(), n),
                )
                    .prop_filter("both classes", |(_, l)| {
                        l.iter().any(|&b| b) && l.iter().any(|&b| !b)
                    })
            })
        }

        proptest! {
            #[test]
            fn rank_auc_equals_pair_enumeration((s, l) in scored_labels(12)) {
                prop_assert_eq!(auc(&s, &l).unwrap(), brute_force_auc(&s, &l));
            }

            #[test]
            fn auc_invariant_under_increasing_transform((s, l) in scored_labels(40)) {
                let t: Vec<f64> = s.iter().map(|v| (0.3 * v).exp() * 5.0 - 2.0).collect();
                prop_assert_eq!(auc(&s, &l).unwrap(), auc(&t, &l).unwrap());
            }

            #[test]
            fn negation_complements(l in prop::collection::vec(any::<bool>(), 2..40), seed in any::<u64>()) {
                prop_assume!(l.iter().any(|&b| b) && l.iter().any(|&b| !b));
                // distinct scores: a seeded permutation of 0..n
                let mut rng = crate::numerics::SeededRng::new(seed);
                let mut s: Vec<f64> = (0..l.len()).map(|i| i as f64).collect();
                rng.shuffle(&mut s);
                let neg: Vec<f64> = s.iter().map(|v| -v).collect();
                let total = auc(&s, &l).unwrap() + auc(&neg, &l).unwrap();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }

            #[test]
            fn report_identities((s, l) in scored_labels(40), delta in -1.0f64..7.0) {
                let m = metrics_at_threshold(&s, &l, delta).unwrap();
                let c = m.confusion;
                prop_assert_eq!(c.total(), m.n);
                prop_assert_eq!(m.acc, (c.tp + c.tn) as f64 / m.n as f64);
                if c.tp + c.fp > 0 {
                    prop_assert_eq!(m.precision, Some(c.tp as f64 / (c.tp + c.fp) as f64));
                } else {
                    prop_assert_eq!(m.precision, None);
                }
                prop_assert_eq!(m.recall, Some(c.tp as f64 / (c.tp + c.fn_) as f64));
            }
        }
    }
}
