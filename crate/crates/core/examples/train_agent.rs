//! Train the Q-learning scaler on the bundled sample, show the reward curve
//! and the greedy provisioning plan it learned.

use coldsim::harness::{load_demand, ExperimentConfig};
use coldsim::qlearn::{evaluate_greedy, train, Hyperparams, TrainOptions};
use coldsim::workload::to_arrivals;

fn main() -> coldsim::Result<()> {
    let cfg = ExperimentConfig::default();
    let trace = load_demand(&cfg)?;
    let out = train(&cfg.env, &trace, 500, &Hyperparams::default(), 42, TrainOptions::default())?;

    println!("epoch  epsilon  mean reward (50 epochs)");
    for chunk in out.curve.chunks(50) {
        let mean = chunk.iter().map(|r| r.total_reward).sum::<f64>() / chunk.len() as f64;
        println!("{:>5}  {:>7.4}  {:>8.2}", chunk[0].epoch, chunk[0].epsilon, mean);
    }
    println!("{} state-action entries", out.table.len());

    // states are exact (n, phi bin, tau bin, window), so a fresh arrival draw
    // can reach a state training never visited; the agent then holds
    println!("\ndemand {:?}", trace.counts);
    for draw in 0..4 {
        let report = evaluate_greedy(&out.table, &cfg.env, &to_arrivals(&trace, draw), draw)?;
        let plan: Vec<u32> = report.windows.iter().map(|w| w.n_hat).collect();
        let tau: Vec<String> = report.windows.iter().map(|w| format!("{:.0}", w.tau)).collect();
        println!("draw {draw}: instances {plan:?}  tau% [{}]", tau.join(", "));
    }
    Ok(())
}
