//! Labeled synthetic ETL streams with injected faults.
//!
//! Normal events draw each numeric field from its base distribution, truncated to
//! the 0.001–0.999 quantile band by rejection. Each event is then, independently
//! with probability `anomaly_rate`, turned into one of four fault classes:
//!
//! | class       | effect                                                        |
//! |-------------|---------------------------------------------------------------|
//! | `delay`     | `latency_ms` × U[5, 20]                                       |
//! | `missing`   | 1–3 maskable numeric fields zeroed, their mask bits set       |
//! | `duplicate` | `records_loaded` doubled, `task_duration_s` halved            |
//! | `spike`     | `amount` × U[10, 50]                                          |

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Exp, Gamma, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{self as sd, ContinuousCDF, DiscreteCDF};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::preprocess::{
    EtlEvent, NumericField, DEFAULT_DEVICE_TYPES, DEFAULT_GEO_REGIONS, MASKABLE_FIELDS,
};

pub const DELAY_FACTOR: (f64, f64) = (5.0, 20.0);
pub const SPIKE_FACTOR: (f64, f64) = (10.0, 50.0);

const BAND: (f64, f64) = (0.001, 0.999);
const DEVICE_WEIGHTS: [f64; 3] = [0.5, 0.3, 0.2];
const REGION_WEIGHTS: [f64; 4] = [0.4, 0.3, 0.2, 0.1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyClass {
    Delay,
    Missing,
    Duplicate,
    Spike,
}

impl AnomalyClass {
    pub const ALL: [AnomalyClass; 4] = [
        AnomalyClass::Delay,
        AnomalyClass::Missing,
        AnomalyClass::Duplicate,
        AnomalyClass::Spike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnomalyClass::Delay => "delay",
            AnomalyClass::Missing => "missing",
            AnomalyClass::Duplicate => "duplicate",
            AnomalyClass::Spike => "spike",
        }
    }
}

impl fmt::Display for AnomalyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnomalyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnomalyClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown anomaly class `{s}`")))
    }
}

/// Relative frequency of each anomaly class among injected events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMix {
    pub delay: f64,
    pub missing: f64,
    pub duplicate: f64,
    pub spike: f64,
}

impl Default for ClassMix {
    fn default() -> Self {
        ClassMix {
            delay: 0.25,
            missing: 0.25,
            duplicate: 0.25,
            spike: 0.25,
        }
    }
}

impl ClassMix {
    pub fn weight(&self, class: AnomalyClass) -> f64 {
        match class {
            AnomalyClass::Delay => self.delay,
            AnomalyClass::Missing => self.missing,
            AnomalyClass::Duplicate => self.duplicate,
            AnomalyClass::Spike => self.spike,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = AnomalyClass::ALL.map(|c| self.weight(c));
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Contract(format!(
                "mix weights must be non-negative, got {self}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!(
                "mix weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    fn pick(&self, u: f64) -> AnomalyClass {
        let mut acc = 0.0;
        for c in AnomalyClass::ALL {
            acc += self.weight(c);
            if u < acc {
                return c;
            }
        }
        // u landed in the rounding slack above the cumulative sum
        *AnomalyClass::ALL
            .iter()
            .rev()
            .find(|c| self.weight(**c) > 0.0)
            .expect("validated mix has positive weight")
    }
}

impl fmt::Display for ClassMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "delay={},missing={},duplicate={},spike={}",
            self.delay, self.missing, self.duplicate, self.spike
        )
    }
}

/// Parses `delay=0.25,missing=0.25,duplicate=0.25,spike=0.25`. Omitted classes get weight 0.
impl FromStr for ClassMix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut mix = ClassMix {
            delay: 0.0,
            missing: 0.0,
            duplicate: 0.0,
            spike: 0.0,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Contract(format!("mix entry `{part}` is not name=weight")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Contract(format!("mix weight `{value}` is not a number")))?;
            match name.trim().parse::<AnomalyClass>()? {
                AnomalyClass::Delay => mix.delay = value,
                AnomalyClass::Missing => mix.missing = value,
                AnomalyClass::Duplicate => mix.duplicate = value,
                AnomalyClass::Spike => mix.spike = value,
            }
        }
        mix.validate()?;
        Ok(mix)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub n_events: usize,
    pub anomaly_rate: f64,
    pub mix: ClassMix,
    pub seed: u64,
    pub start_timestamp_ms: i64,
    pub mean_gap_ms: f64,
    /// Log-normal location and scale of `amount`.
    pub amount_log_mu: f64,
    pub amount_log_sigma: f64,
    /// Gamma shape and scale of `latency_ms`.
    pub latency_shape: f64,
    pub latency_scale: f64,
    /// Gamma shape and scale of `task_duration_s`.
    pub duration_shape: f64,
    pub duration_scale: f64,
    /// Poisson mean of `records_loaded`.
    pub records_mean: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            n_events: 10_000,
            anomaly_rate: 0.05,
            mix: ClassMix::default(),
            seed: 7,
            // 2024-01-01T00:00:00Z
            start_timestamp_ms: 1_704_067_200_000,
            mean_gap_ms: 30_000.0,
            amount_log_mu: 4.0,
            amount_log_sigma: 0.5,
            latency_shape: 4.0,
            latency_scale: 25.0,
            duration_shape: 6.0,
            duration_scale: 5.0,
            records_mean: 200.0,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.anomaly_rate) {
            return Err(Error::Contract(format!(
                "anomaly rate must be in [0, 1), got {}",
                self.anomaly_rate
            )));
        }
        self.mix.validate()?;
        let positive = [
            ("mean_gap_ms", self.mean_gap_ms),
            ("amount_log_sigma", self.amount_log_sigma),
            ("latency_shape", self.latency_shape),
            ("latency_scale", self.latency_scale),
            ("duration_shape", self.duration_shape),
            ("duration_scale", self.duration_scale),
            ("records_mean", self.records_mean),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Contract(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.amount_log_mu.is_finite() {
            return Err(Error::Contract("amount_log_mu must be finite".into()));
        }
        Ok(())
    }

    /// 0.001–0.999 quantile bands of the base distributions.
    pub fn bands(&self) -> Result<NormalBands> {
        let bad = |what: &str, e: &dyn fmt::Display| Error::Contract(format!("{what}: {e}"));
        let amount = sd::LogNormal::new(self.amount_log_mu, self.amount_log_sigma)
            .map_err(|e| bad("amount distribution", &e))?;
        let latency = sd::Gamma::new(self.latency_shape, 1.0 / self.latency_scale)
            .map_err(|e| bad("latency distribution", &e))?;
        let duration = sd::Gamma::new(self.duration_shape, 1.0 / self.duration_scale)
            .map_err(|e| bad("duration distribution", &e))?;
        let records =
            sd::Poisson::new(self.records_mean).map_err(|e| bad("records distribution", &e))?;
        Ok(NormalBands {
            amount: (amount.inverse_cdf(BAND.0), amount.inverse_cdf(BAND.1)),
            latency_ms: (latency.inverse_cdf(BAND.0), latency.inverse_cdf(BAND.1)),
            task_duration_s: (duration.inverse_cdf(BAND.0), duration.inverse_cdf(BAND.1)),
            records_loaded: (records.inverse_cdf(BAND.0), records.inverse_cdf(BAND.1)),
        })
    }
}

/// Inclusive ranges normal events are confined to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalBands {
    pub amount: (f64, f64),
    pub latency_ms: (f64, f64),
    pub task_duration_s: (f64, f64),
    pub records_loaded: (u64, u64),
}

impl NormalBands {
    pub fn contains(&self, e: &EtlEvent) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        within(e.amount, self.amount)
            && within(e.latency_ms, self.latency_ms)
            && within(e.task_duration_s, self.task_duration_s)
            && (self.records_loaded.0..=self.records_loaded.1).contains(&e.records_loaded)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub event_id: u64,
    pub event: EtlEvent,
    pub label: bool,
    pub anomaly_class: Option<AnomalyClass>,
}

struct Samplers {
    gap: Exp<f64>,
    amount: LogNormal<f64>,
    latency: Gamma<f64>,
    duration: Gamma<f64>,
    records: Poisson<f64>,
    bands: NormalBands,
}

impl Samplers {
    fn new(cfg: &StreamConfig) -> Result<Self> {
        let bad = |e: &dyn fmt::Display| Error::Contract(format!("stream distribution: {e}"));
        Ok(Samplers {
            gap: Exp::new(1.0 / cfg.mean_gap_ms).map_err(|e| bad(&e))?,
            amount: LogNormal::new(cfg.amount_log_mu, cfg.amount_log_sigma).map_err(|e| bad(&e))?,
            latency: Gamma::new(cfg.latency_shape, cfg.latency_scale).map_err(|e| bad(&e))?,
            duration: Gamma::new(cfg.duration_shape, cfg.duration_scale).map_err(|e| bad(&e))?,
            records: Poisson::new(cfg.records_mean).map_err(|e| bad(&e))?,
            bands: cfg.bands()?,
        })
    }
}

fn draw_in_band<D: Distribution<f64>>(d: &D, (lo, hi): (f64, f64), rng: &mut SeededRng) -> f64 {
    loop {
        let v = d.sample(rng);
        if v >= lo && v <= hi {
            return v;
        }
    }
}

fn pick_weighted(weights: &[f64], rng: &mut SeededRng) -> usize {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn normal_event(timestamp: i64, s: &Samplers, rng: &mut SeededRng) -> EtlEvent {
    let amount = draw_in_band(&s.amount, s.bands.amount, rng);
    let latency_ms = draw_in_band(&s.latency, s.bands.latency_ms, rng);
    let task_duration_s = draw_in_band(&s.duration, s.bands.task_duration_s, rng);
    let (rlo, rhi) = s.bands.records_loaded;
    let records_loaded = draw_in_band(&s.records, (rlo as f64, rhi as f64), rng) as u64;
    let device = pick_weighted(&DEVICE_WEIGHTS, rng);
    let region = pick_weighted(&REGION_WEIGHTS, rng);
    EtlEvent {
        timestamp,
        amount,
        latency_ms,
        task_duration_s,
        records_loaded,
        device_type: DEFAULT_DEVICE_TYPES[device].to_string(),
        geo_region: DEFAULT_GEO_REGIONS[region].to_string(),
        missing_mask: vec![false; MASKABLE_FIELDS.len()],
    }
}

/// Applies one fault class to a normal event.
pub fn inject(mut event: EtlEvent, class: AnomalyClass, rng: &mut SeededRng) -> Result<EtlEvent> {
    match class {
        AnomalyClass::Delay => {
            event.latency_ms *= rng.draw_uniform(DELAY_FACTOR.0, DELAY_FACTOR.1)?;
        }
        AnomalyClass::Missing => {
            let count = 1 + rng.below(MASKABLE_FIELDS.len());
            let mut slots: Vec<usize> = (0..MASKABLE_FIELDS.len()).collect();
            rng.shuffle(&mut slots);
            if event.missing_mask.len() != MASKABLE_FIELDS.len() {
                event.missing_mask = vec![false; MASKABLE_FIELDS.len()];
            }
            for &slot in &slots[..count] {
                event.set_numeric(MASKABLE_FIELDS[slot], 0.0);
                event.missing_mask[slot] = true;
            }
        }
        AnomalyClass::Duplicate => {
            event.records_loaded *= 2;
            event.task_duration_s /= 2.0;
        }
        AnomalyClass::Spike => {
            let factor = rng.draw_uniform(SPIKE_FACTOR.0, SPIKE_FACTOR.1)?;
            event.set_numeric(NumericField::Amount, event.amount * factor);
        }
    }
    Ok(event)
}

/// Generates `cfg.n_events` labeled events with strictly increasing timestamps.
pub fn generate(cfg: &StreamConfig) -> Result<Vec<LabeledEvent>> {
    cfg.validate()?;
    let samplers = Samplers::new(cfg)?;
    let mut rng = SeededRng::new(cfg.seed);
    let mut timestamp = cfg.start_timestamp_ms;
    let mut out = Vec::with_capacity(cfg.n_events);
    for i in 0..cfg.n_events {
        if i > 0 {
            let gap = samplers.gap.sample(&mut rng).ceil().max(1.0);
            timestamp += gap as i64;
        }
        let event = normal_event(timestamp, &samplers, &mut rng);
        let is_anomaly = rng.next_f64() < cfg.anomaly_rate;
        let (event, class) = if is_anomaly {
            let class = cfg.mix.pick(rng.next_f64());
            (inject(event, class, &mut rng)?, Some(class))
        } else {
            (event, None)
        };
        out.push(LabeledEvent {
            event_id: i as u64,
            event,
            label: is_anomaly,
            anomaly_class: class,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, rate: f64, seed: u64) -> StreamConfig {
        StreamConfig {
            n_events: n,
            anomaly_rate: rate,
            seed,
            ..StreamConfig::default()
        }
    }

    #[test]
    fn zero_rate_is_all_normal() {
        let s = generate(&small(2000, 0.0, 1)).unwrap();
        assert!(s.iter().all(|e| !e.label && e.anomaly_class.is_none()));
    }

    #[test]
    fn same_seed_same_stream() {
        assert_eq!(
            generate(&small(500, 0.1, 3)).unwrap(),
            generate(&small(500, 0.1, 3)).unwrap()
        );
        assert_ne!(
            generate(&small(500, 0.1, 3)).unwrap(),
            generate(&small(500, 0.1, 4)).unwrap()
        );
    }

    #[test]
    fn anomaly_count_near_rate() {
        let s = generate(&small(10_000, 0.05, 7)).unwrap();
        let n = s.iter().filter(|e| e.label).count();
        assert!((400..=600).contains(&n), "{n} anomalies");
    }

    #[test]
    fn class_present_iff_labeled() {
        for e in generate(&small(3000, 0.2, 11)).unwrap() {
            assert_eq!(e.label, e.anomaly_class.is_some());
        }
    }

    #[test]
    fn delay_raises_latency() {
        let mut rng = SeededRng::new(1);
        let s = Samplers::new(&StreamConfig::default()).unwrap();
        for _ in 0..200 {
            let e = normal_event(0, &s, &mut rng);
            let out = inject(e.clone(), AnomalyClass::Delay, &mut rng).unwrap();
            assert!(out.latency_ms > e.latency_ms);
            assert!(out.latency_ms >= 5.0 * e.latency_ms && out.latency_ms <= 20.0 * e.latency_ms);
        }
    }

    #[test]
    fn missing_sets_mask_bits() {
        let mut rng = SeededRng::new(2);
        let s = Samplers::new(&StreamConfig::default()).unwrap();
        let mut counts = [0usize; 4];
        for _ in 0..300 {
            let e = normal_event(0, &s, &mut rng);
            let out = inject(e, AnomalyClass::Missing, &mut rng).unwrap();
            let set = out.missing_mask.iter().filter(|&&m| m).count();
            assert!((1..=3).contains(&set));
            counts[set] += 1;
            for (i, f) in MASKABLE_FIELDS.iter().enumerate() {
                if out.missing_mask[i] {
                    assert_eq!(out.numeric(*f), 0.0);
                }
            }
        }
        assert!(counts[1] > 0 && counts[2] > 0 && counts[3] > 0);
    }

    #[test]
    fn duplicate_signature() {
        let mut rng = SeededRng::new(3);
        let s = Samplers::new(&StreamConfig::default()).unwrap();
        let e = normal_event(0, &s, &mut rng);
        let out = inject(e.clone(), AnomalyClass::Duplicate, &mut rng).unwrap();
        assert_eq!(out.records_loaded, 2 * e.records_loaded);
        assert_eq!(out.task_duration_s, e.task_duration_s / 2.0);
    }

    #[test]
    fn spike_bounds() {
        let mut rng = SeededRng::new(4);
        let s = Samplers::new(&StreamConfig::default()).unwrap();
        for _ in 0..200 {
            let e = normal_event(0, &s, &mut rng);
            let a = e.amount;
            let out = inject(e, AnomalyClass::Spike, &mut rng).unwrap();
            assert!(out.amount >= 10.0 * a && out.amount <= 50.0 * a);
        }
    }

    #[test]
    fn unknown_class_name() {
        assert!("format".parse::<AnomalyClass>().is_err());
    }

    #[test]
    fn class_counts_follow_mix() {
        let cfg = StreamConfig {
            n_events: 40_000,
            anomaly_rate: 0.5,
            mix: "delay=0.1,missing=0.2,duplicate=0.3,spike=0.4"
                .parse()
                .unwrap(),
            seed: 5,
            ..StreamConfig::default()
        };
        let s = generate(&cfg).unwrap();
        let anomalies: Vec<_> = s.iter().filter_map(|e| e.anomaly_class).collect();
        let n = anomalies.len() as f64;
        for c in AnomalyClass::ALL {
            let p = cfg.mix.weight(c);
            let observed = anomalies.iter().filter(|&&a| a == c).count() as f64;
            let sd = (n * p * (1.0 - p)).sqrt();
            assert!(
                (observed - n * p).abs() <= 3.0 * sd,
                "{c}: {observed} vs {}",
                n * p
            );
        }
    }

    #[test]
    fn normals_are_clean_and_in_band() {
        let cfg = small(5000, 0.1, 6);
        let bands = cfg.bands().unwrap();
        for e in generate(&cfg).unwrap().iter().filter(|e| !e.label) {
            assert!(!e.event.any_missing());
            assert!(bands.contains(&e.event), "{:?}", e.event);
        }
    }

    #[test]
    fn timestamps_increase_with_exponential_gaps() {
        let cfg = small(20_000, 0.05, 8);
        let s = generate(&cfg).unwrap();
        let gaps: Vec<f64> = s
            .windows(2)
            .map(|w| (w[1].event.timestamp - w[0].event.timestamp) as f64)
            .collect();
        assert!(gaps.iter().all(|&g| g >= 1.0));
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        // ceil adds ~0.5 ms on average; sampling error of the mean is ~0.7%
        assert!(
            (mean / cfg.mean_gap_ms - 1.0).abs() < 0.03,
            "mean gap {mean}"
        );
        // exponential: standard deviation equals the mean
        let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / gaps.len() as f64;
        assert!((var.sqrt() / mean - 1.0).abs() < 0.05);
    }

    #[test]
    fn mix_parsing() {
        let m: ClassMix = "delay=0.25,missing=0.25,duplicate=0.25,spike=0.25"
            .parse()
            .unwrap();
        assert_eq!(m, ClassMix::default());
        assert!("delay=0.5,spike=0.4".parse::<ClassMix>().is_err());
        assert!("delay=1.5,spike=-0.5".parse::<ClassMix>().is_err());
        assert!("delay".parse::<ClassMix>().is_err());
        assert!("bogus=1".parse::<ClassMix>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(small(10, 1.0, 1).validate().is_err());
        assert!(small(10, -0.1, 1).validate().is_err());
        assert!(small(10, 0.99, 1).validate().is_ok());
    }
}
