//! Experiment orchestration: configuration, training runs, policy
//! comparisons, trace tooling and file output.

mod compare;
mod config;

pub use compare::{
    cmd_compare, evaluate_policies, qtable_path, ComparisonReport, PolicyDelta, PolicySummary, COMPARE_CSV_HEADER,
};
pub use config::{ExperimentConfig, Granularity, PolicySelection};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::qlearn::{train, EpochRecord, TrainOptions, TrainingOutcome};
use crate::workload::{downscale, parse_trace, synthetic, Trace};

/// Ten minutes of per-minute invocation counts for one function: a burst,
/// a quiet stretch, then a second burst.
pub const SAMPLE_TRACE: &str = include_str!("../../data/sample_minutes.csv");

/// Reads a trace in either granularity and returns per-window counts.
pub fn read_trace(text: &str, granularity: Granularity, window_duration: f64) -> Result<Trace> {
    match granularity {
        Granularity::Window => parse_trace(text, window_duration),
        Granularity::Minute => {
            let per = window_duration / 60.0;
            if per < 1.0 || per.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "window of {window_duration} s is not a whole number of minutes"
                )));
            }
            parse_trace(text, 60.0)?.regroup(per as usize, window_duration)
        }
    }
}

/// The demand a config describes: a synthetic pattern, a trace file, or the
/// bundled sample, rescaled to `total-requests` and checked against the
/// window layout. An all-zero trace is kept as is.
pub fn load_demand(cfg: &ExperimentConfig) -> Result<Trace> {
    let env = &cfg.env;
    let trace = if let Some(pattern) = cfg.pattern {
        synthetic(pattern, env.windows as usize, cfg.total_requests, env.window_duration)?
    } else {
        let (text, granularity) = match &cfg.trace {
            Some(path) => (
                std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
                cfg.trace_granularity,
            ),
            None => (SAMPLE_TRACE.to_string(), Granularity::Minute),
        };
        let raw = read_trace(&text, granularity, env.window_duration)?;
        if raw.total() == 0 || raw.total() == cfg.total_requests {
            raw
        } else {
            downscale(&raw, cfg.total_requests)?
        }
    };
    env.check_trace(&trace)?;
    Ok(trace)
}

/// One-line count list, e.g. `[20,20,20,20,20]`, then a summary line.
pub fn describe_trace(trace: &Trace) -> String {
    let counts: Vec<String> = trace.counts.iter().map(|c| c.to_string()).collect();
    format!(
        "[{}]\nwindows={} total={} peak={} window-duration={}\n",
        counts.join(","),
        trace.windows(),
        trace.total(),
        trace.counts.iter().max().copied().unwrap_or(0),
        trace.window_duration
    )
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn manifest_text(command: &str, cfg: &ExperimentConfig) -> String {
    format!("# coldsim {command} {}\n{}", env!("CARGO_PKG_VERSION"), cfg.to_manifest())
}

pub const REWARDS_CSV_HEADER: &str = "epoch,epsilon,total_reward";

pub fn rewards_csv(curve: &[EpochRecord]) -> String {
    let mut out = format!("{REWARDS_CSV_HEADER}\n");
    for r in curve {
        writeln!(out, "{},{},{}", r.epoch, r.epsilon, r.total_reward).unwrap();
    }
    out
}

/// Files written by [`cmd_train`].
#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub qtable: PathBuf,
    pub rewards: PathBuf,
    pub manifest: PathBuf,
    pub outcome: TrainingOutcome,
    pub trace: Trace,
}

/// Trains the agent and writes `qtable.csv`, `rewards.csv` and
/// `manifest.txt` under the configured output directory.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainArtifacts> {
    cfg.validate()?;
    if !matches!(cfg.policy, PolicySelection::Rl | PolicySelection::All) {
        return Err(Error::Config(format!("train only applies to the rl policy, not {}", cfg.policy)));
    }
    let trace = load_demand(cfg)?;
    let outcome = train(
        &cfg.env,
        &trace,
        cfg.epochs,
        &cfg.hyper,
        cfg.seed,
        TrainOptions {
            fixed_arrivals: cfg.fixed_arrivals,
        },
    )?;
    ensure_dir(&cfg.out)?;
    let qtable = cfg.qtable.clone().unwrap_or_else(|| cfg.out.join("qtable.csv"));
    let rewards = cfg.out.join("rewards.csv");
    let manifest = cfg.out.join("manifest.txt");
    outcome.table.save(&qtable)?;
    write_file(&rewards, &rewards_csv(&outcome.curve))?;
    write_file(&manifest, &manifest_text("train", cfg))?;
    Ok(TrainArtifacts {
        qtable,
        rewards,
        manifest,
        outcome,
        trace,
    })
}
