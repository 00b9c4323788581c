use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coldsim::harness::{self, describe_trace, ExperimentConfig, Granularity};
use coldsim::workload::{downscale, synthetic, Pattern, Trace};
use coldsim::{Error, Result};

#[derive(Parser)]
#[command(name = "coldsim", version, about = "Serverless cold-start simulator and Q-learning scaler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the agent and write qtable.csv, rewards.csv and manifest.txt.
    Train(RunArgs),
    /// Evaluate rl, hpa and keep-alive pools on identical arrivals.
    Compare(RunArgs),
    /// Inspect, rescale or generate demand traces.
    #[command(subcommand)]
    Trace(TraceCommand),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    qtable: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    fixed_arrivals: bool,
    #[arg(long)]
    reps: Option<u32>,
    /// Override any config key, e.g. `--set service-time=15`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Print window counts and totals.
    Inspect {
        path: PathBuf,
        #[arg(long, default_value = "window")]
        granularity: String,
        #[arg(long, default_value_t = 120.0)]
        window_duration: f64,
    },
    /// Rescale a trace to an exact total.
    Downscale {
        path: PathBuf,
        total: u64,
        #[arg(long, default_value = "window")]
        granularity: String,
        #[arg(long, default_value_t = 120.0)]
        window_duration: f64,
        /// Also write the result as a trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a constant, ramp or spike trace.
    Synth {
        pattern: String,
        windows: usize,
        total: u64,
        #[arg(long, default_value_t = 120.0)]
        window_duration: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for pair in &args.overrides {
        cfg.set_pair(pair)?;
    }
    if let Some(p) = args.trace {
        cfg.trace = Some(p);
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = &args.policy {
        cfg.set("policy", p)?;
    }
    if let Some(q) = args.qtable {
        cfg.qtable = Some(q);
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if args.fixed_arrivals {
        cfg.fixed_arrivals = true;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    Ok(cfg)
}

fn read(path: &Path, granularity: &str, window_duration: f64) -> Result<Trace> {
    let g: Granularity = granularity.parse()?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    harness::read_trace(&text, g, window_duration)
}

fn emit(trace: &Trace, out: Option<&Path>) -> Result<()> {
    print!("{}", describe_trace(trace));
    if let Some(path) = out {
        std::fs::write(path, trace.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = build_config(args)?;
            let art = harness::cmd_train(&cfg)?;
            let last = art.outcome.curve.last();
            println!(
                "trained {} epochs on {:?}: {} table entries, final reward {:.3}",
                cfg.epochs,
                art.trace.counts,
                art.outcome.table.len(),
                last.map_or(0.0, |r| r.total_reward)
            );
            println!("wrote {}, {}, {}", art.qtable.display(), art.rewards.display(), art.manifest.display());
        }
        Command::Compare(args) => {
            let cfg = build_config(args)?;
            let report = harness::cmd_compare(&cfg)?;
            println!("{:<14} {:>9} {:>9} {:>8} {:>7}", "policy", "failure%", "success%", "wastage", "cold");
            for p in &report.policies {
                println!(
                    "{:<14} {:>9.2} {:>9.2} {:>8.3} {:>7}",
                    p.policy, p.failure_rate, p.mean_success_rate, p.idle_wastage, p.cold_starts
                );
            }
            println!("wrote {}", cfg.out.join("compare.csv").display());
        }
        Command::Trace(TraceCommand::Inspect {
            path,
            granularity,
            window_duration,
        }) => emit(&read(&path, &granularity, window_duration)?, None)?,
        Command::Trace(TraceCommand::Downscale {
            path,
            total,
            granularity,
            window_duration,
            out,
        }) => {
            let t = downscale(&read(&path, &granularity, window_duration)?, total)?;
            emit(&t, out.as_deref())?
        }
        Command::Trace(TraceCommand::Synth {
            pattern,
            windows,
            total,
            window_duration,
            out,
        }) => {
            let p: Pattern = pattern.parse()?;
            emit(&synthetic(p, windows, total, window_duration)?, out.as_deref())?
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coldsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
