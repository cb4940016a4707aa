//! Runs the reference workload plus both default sweeps for one or more seeds.
//!
//!     cargo run --release -p etlsentry --example benchmark -- 7 8 9

use std::time::Instant;

use etlsentry::autoencoder::TrainConfig;
use etlsentry::detector::DEFAULT_QUANTILE;
use etlsentry::eval::{
    run_config, standard_benchmark, sweep_latent_dim, sweep_learning_rate, SweepOptions,
    SweepResult, DEFAULT_K_GRID, DEFAULT_LR_GRID,
};

fn print_sweep(r: &SweepResult) {
    println!("{:>10} {:>8} {:>8} {:>8} {:>8}", r.knob, "auc", "acc", "prec", "recall");
    for p in &r.points {
        match &p.report {
            Some(m) => println!(
                "{:>10} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                p.knob_value,
                m.auc,
                m.acc,
                m.precision.unwrap_or(f64::NAN),
                m.recall.unwrap_or(f64::NAN)
            ),
            None => println!("{:>10} diverged", p.knob_value),
        }
    }
}

fn auc_at(r: &SweepResult, v: f64) -> Option<f64> {
    r.point(v).and_then(|p| p.report.as_ref()).map(|m| m.auc)
}

fn precision_at(r: &SweepResult, v: f64) -> Option<f64> {
    r.point(v).and_then(|p| p.report.as_ref()).and_then(|m| m.precision)
}

fn main() -> etlsentry::Result<()> {
    let mut seeds: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    if seeds.is_empty() {
        seeds.push(7);
    }
    for seed in seeds {
        let t = Instant::now();
        let bundle = standard_benchmark(seed)?;
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        let out = run_config(&bundle, &cfg, DEFAULT_QUANTILE)?;
        let m = &out.report;
        println!("== seed {seed}");
        println!(
            "defaults: auc {:.4} acc {:.4} precision {:.4} recall {:.4} delta {:.4} ({:.1?})",
            m.auc,
            m.acc,
            m.precision.unwrap_or(f64::NAN),
            m.recall.unwrap_or(f64::NAN),
            m.delta_used,
            t.elapsed()
        );

        let opts = SweepOptions::new(seed);
        let lr = sweep_learning_rate(&cfg, &DEFAULT_LR_GRID, &bundle, opts)?;
        let k = sweep_latent_dim(&cfg, &DEFAULT_K_GRID, &bundle, opts)?;
        print_sweep(&lr);
        print_sweep(&k);

        let best = auc_at(&lr, 0.001).unwrap_or(f64::NAN);
        let lr_shape = best >= auc_at(&lr, 0.0001).unwrap_or(f64::INFINITY)
            && auc_at(&lr, 0.01).map_or(true, |h| h < best);
        let mid = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .filter_map(|&v| precision_at(&k, v))
            .fold(f64::NEG_INFINITY, f64::max);
        let k_shape = mid > precision_at(&k, 4.0).unwrap_or(f64::INFINITY)
            && mid > precision_at(&k, 128.0).unwrap_or(f64::INFINITY);
        println!(
            "summary seed {seed}: auc {:.4} recall {:.4} lr-shape {} k-shape {}",
            m.auc,
            m.recall.unwrap_or(f64::NAN),
            if lr_shape { "yes" } else { "no" },
            if k_shape { "yes" } else { "no" }
        );
    }
    Ok(())
}
