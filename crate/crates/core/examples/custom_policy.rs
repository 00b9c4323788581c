//! Plug a hand-written policy into the runner: a schedule that sizes the
//! pool from the known demand of the coming window.

use coldsim::harness::{load_demand, ExperimentConfig};
use coldsim::policies::{ScaleTarget, ScalingPolicy, WindowObservation};
use coldsim::runner::run_timeframe;
use coldsim::workload::to_arrivals;

struct Oracle {
    counts: Vec<u64>,
    service_time: f64,
    window: f64,
    max: u32,
}

impl ScalingPolicy for Oracle {
    fn label(&self) -> String {
        "oracle".into()
    }

    fn on_window(&mut self, obs: &WindowObservation) -> Option<ScaleTarget> {
        let demand = *self.counts.get(obs.index as usize)? as f64;
        // offered load in instance-equivalents, with some headroom
        let need = (1.25 * demand * self.service_time / self.window).ceil() as i64;
        Some(ScaleTarget::clamped(need, self.max))
    }
}

fn main() -> coldsim::Result<()> {
    let cfg = ExperimentConfig::default();
    let trace = load_demand(&cfg)?;
    let mut oracle = Oracle {
        counts: trace.counts.clone(),
        service_time: cfg.env.cluster.service_time,
        window: cfg.env.window_duration,
        max: cfg.env.max_instances(),
    };
    let ep = run_timeframe(&cfg.env, &to_arrivals(&trace, 5), &mut oracle, 5)?;
    for w in &ep.report.windows {
        println!("window {} demand {:>3}: n={} tau={:.1}%", w.window, w.arrivals, w.n_hat, w.tau);
    }
    let t = &ep.report.totals;
    println!("failure {:.2}%  wastage {:.3}", t.failure_rate, t.idle_wastage);
    Ok(())
}
