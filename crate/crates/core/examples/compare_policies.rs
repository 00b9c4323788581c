//! Full experiment: train, then evaluate the agent against the baselines on
//! identical arrivals and write the report files to a directory.
//!
//! cargo run --release --example compare_policies -- [OUT_DIR]

use coldsim::harness::{cmd_compare, cmd_train, ExperimentConfig};

fn main() -> coldsim::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.out = std::env::args().nth(1).unwrap_or_else(|| "target/compare".into()).into();

    let trained = cmd_train(&cfg)?;
    println!("demand {:?}", trained.trace.counts);
    let report = cmd_compare(&cfg)?;

    println!("{:<12} {:>8} {:>8} {:>8} {:>6}", "policy", "fail%", "succ%", "waste", "cold");
    for p in &report.policies {
        println!(
            "{:<12} {:>8.2} {:>8.2} {:>8.3} {:>6}",
            p.policy, p.failure_rate, p.mean_success_rate, p.idle_wastage, p.cold_starts
        );
    }
    for d in &report.deltas {
        println!(
            "vs {:<12} failure gap {:+.2} pp, wastage gap {:+.1} pp, extra cold starts {:+}",
            d.baseline,
            d.failure_rate_diff,
            100.0 * d.wastage_diff,
            -d.cold_start_diff
        );
    }
    println!("files in {}", cfg.out.display());
    Ok(())
}
