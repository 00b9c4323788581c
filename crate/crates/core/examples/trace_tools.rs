//! Demand traces: the bundled per-minute sample, regrouping into windows,
//! rescaling, synthetic patterns and seeded arrival schedules.

use coldsim::harness::{describe_trace, read_trace, Granularity, SAMPLE_TRACE};
use coldsim::workload::{downscale, synthetic, to_arrivals, Pattern};

fn main() -> coldsim::Result<()> {
    let minutes = read_trace(SAMPLE_TRACE, Granularity::Minute, 60.0)?;
    println!("per minute:\n{}", describe_trace(&minutes));

    let windows = read_trace(SAMPLE_TRACE, Granularity::Minute, 120.0)?;
    println!("two-minute windows:\n{}", describe_trace(&windows));

    let small = downscale(&windows, 100)?;
    println!("rescaled to 100:\n{}", describe_trace(&small));

    for p in [Pattern::Constant, Pattern::Ramp, Pattern::Spike] {
        let t = synthetic(p, 5, 100, 120.0)?;
        println!("{p:<8} {:?}", t.counts);
    }

    let schedule = to_arrivals(&small, 7);
    println!("{} arrivals; first five:", schedule.len());
    for (t, w) in schedule.arrivals.iter().take(5) {
        println!("  {:>8.3} s  window {w}", t.secs());
    }
    Ok(())
}
