//! Run the threshold autoscaler and fixed keep-alive pools over the bundled
//! sample and print per-window metrics.

use coldsim::harness::{load_demand, ExperimentConfig};
use coldsim::metrics::WINDOW_CSV_HEADER;
use coldsim::policies::{Hpa, HpaConfig, KeepAlive, ScalingPolicy};
use coldsim::runner::run_timeframe;
use coldsim::workload::to_arrivals;

fn main() -> coldsim::Result<()> {
    let cfg = ExperimentConfig::default();
    let trace = load_demand(&cfg)?;
    let schedule = to_arrivals(&trace, 11);

    let mut policies: Vec<Box<dyn ScalingPolicy>> = vec![
        Box::new(Hpa::new(HpaConfig::default())?),
        Box::new(Hpa::new(HpaConfig {
            stabilize: false,
            ..HpaConfig::default()
        })?),
        Box::new(KeepAlive::new(4, 7)?),
        Box::new(KeepAlive::new(7, 7)?),
    ];
    for (i, policy) in policies.iter_mut().enumerate() {
        let episode = run_timeframe(&cfg.env, &schedule, policy.as_mut(), 11)?;
        let r = &episode.report;
        let note = if i == 1 { " (no stabilization)" } else { "" };
        println!("== {}{note}", r.policy);
        println!("{WINDOW_CSV_HEADER}");
        for w in &r.windows {
            println!("{}", w.csv_row());
        }
        println!(
            "failure {:.1}%  wastage {:.3}  cold starts {}\n",
            r.totals.failure_rate, r.totals.idle_wastage, r.totals.cold_starts
        );
    }
    Ok(())
}
