use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::{ensure_dir, load_demand, manifest_text, write_file, ExperimentConfig, PolicySelection};
use crate::error::{Error, Result};
use crate::metrics::RunReport;
use crate::policies::{Hpa, KeepAlive, ScalingPolicy};
use crate::qlearn::{GreedyAgent, QTable};
use crate::rng::{self, stream_rng};
use crate::runner::run_timeframe;
use crate::workload::{arrivals_with, Trace};

pub const COMPARE_CSV_HEADER: &str =
    "policy,rep,window,phi,tau,n_hat,arrivals,successes,failures,cold_starts,idle_fraction";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Contender {
    Rl,
    Hpa,
    KeepAlive(u32),
}

fn contenders(cfg: &ExperimentConfig) -> Vec<Contender> {
    let pools = cfg.pool_sizes.iter().map(|&p| Contender::KeepAlive(p));
    match cfg.policy {
        PolicySelection::All => [Contender::Rl, Contender::Hpa].into_iter().chain(pools).collect(),
        PolicySelection::Rl => vec![Contender::Rl],
        PolicySelection::Hpa => vec![Contender::Hpa],
        PolicySelection::KeepAlive => pools.collect(),
    }
}

/// Aggregate over every repetition of one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub reps: u32,
    pub arrivals: u64,
    pub successes: u64,
    pub failures: u64,
    /// Failures over arrivals across all repetitions, percent.
    pub failure_rate: f64,
    /// Mean of per-repetition success percentages.
    pub mean_success_rate: f64,
    pub cold_starts: u64,
    /// Idle share of all ready slot-time across repetitions.
    pub idle_wastage: f64,
    pub mean_phi: f64,
}

impl PolicySummary {
    fn from_runs(runs: &[&RunReport]) -> Self {
        let n = runs.len().max(1) as f64;
        let arrivals: u64 = runs.iter().map(|r| r.totals.arrivals).sum();
        let successes: u64 = runs.iter().map(|r| r.totals.successes).sum();
        let failures: u64 = runs.iter().map(|r| r.totals.failures).sum();
        let (ready, busy) = runs
            .iter()
            .flat_map(|r| &r.windows)
            .fold((0.0, 0.0), |(r, b), w| (r + w.ready_seconds, b + w.busy_seconds));
        PolicySummary {
            policy: runs.first().map(|r| r.policy.clone()).unwrap_or_default(),
            reps: runs.len() as u32,
            arrivals,
            successes,
            failures,
            failure_rate: if arrivals == 0 {
                0.0
            } else {
                100.0 * failures as f64 / arrivals as f64
            },
            mean_success_rate: runs.iter().map(|r| r.totals.throughput).sum::<f64>() / n,
            cold_starts: runs.iter().map(|r| r.totals.cold_starts).sum(),
            idle_wastage: if ready <= 0.0 { 0.0 } else { (1.0 - busy / ready).clamp(0.0, 1.0) },
            mean_phi: runs.iter().map(|r| r.totals.mean_phi).sum::<f64>() / n,
        }
    }
}

/// How the agent fares against one baseline; positive values favour the agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDelta {
    pub baseline: String,
    /// Baseline failure rate minus agent failure rate, percentage points.
    pub failure_rate_diff: f64,
    /// Agent mean success rate minus baseline, percentage points.
    pub success_rate_gain: f64,
    /// Baseline idle wastage minus agent idle wastage, fraction.
    pub wastage_diff: f64,
    /// Baseline cold starts minus agent cold starts.
    pub cold_start_diff: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub trace: Vec<u64>,
    pub policies: Vec<PolicySummary>,
    pub deltas: Vec<PolicyDelta>,
    /// Indexed by repetition, then policy in `policies` order.
    #[serde(skip)]
    pub runs: Vec<Vec<RunReport>>,
}

impl ComparisonReport {
    pub fn summary(&self, policy: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == policy)
    }

    pub fn delta(&self, baseline: &str) -> Option<&PolicyDelta> {
        self.deltas.iter().find(|d| d.baseline == baseline)
    }

    /// Every policy's per-repetition runs.
    pub fn runs_of(&self, policy: &str) -> Vec<&RunReport> {
        self.runs.iter().flatten().filter(|r| r.policy == policy).collect()
    }

    /// One row per (repetition, policy, window).
    pub fn to_csv(&self) -> String {
        let mut out = format!("{COMPARE_CSV_HEADER}\n");
        for (rep, runs) in self.runs.iter().enumerate() {
            for run in runs {
                for w in &run.windows {
                    writeln!(out, "{},{rep},{}", run.policy, w.csv_row()).unwrap();
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn assemble(seed: u64, trace: &Trace, runs: Vec<Vec<RunReport>>) -> Self {
        let labels: Vec<String> = runs
            .first()
            .map(|r| r.iter().map(|r| r.policy.clone()).collect())
            .unwrap_or_default();
        let policies: Vec<PolicySummary> = labels
            .iter()
            .map(|l| {
                let of: Vec<&RunReport> = runs.iter().flatten().filter(|r| &r.policy == l).collect();
                PolicySummary::from_runs(&of)
            })
            .collect();
        let deltas = match policies.iter().find(|p| p.policy == "rl") {
            Some(rl) => policies
                .iter()
                .filter(|p| p.policy != "rl")
                .map(|b| PolicyDelta {
                    baseline: b.policy.clone(),
                    failure_rate_diff: b.failure_rate - rl.failure_rate,
                    success_rate_gain: rl.mean_success_rate - b.mean_success_rate,
                    wastage_diff: b.idle_wastage - rl.idle_wastage,
                    cold_start_diff: b.cold_starts as i64 - rl.cold_starts as i64,
                })
                .collect(),
            None => Vec::new(),
        };
        ComparisonReport {
            seed,
            trace: trace.counts.clone(),
            policies,
            deltas,
            runs,
        }
    }
}

/// Evaluates every selected policy on the same arrivals for each repetition.
/// Repetitions run in parallel; results are assembled in repetition order.
/// The Q-table is only read.
pub fn evaluate_policies(cfg: &ExperimentConfig, trace: &Trace, table: Option<&QTable>) -> Result<ComparisonReport> {
    let entrants = contenders(cfg);
    if entrants.contains(&Contender::Rl) && table.is_none() {
        return Err(Error::Config("the rl policy needs a Q-table".into()));
    }
    let hpa = cfg.hpa_config();
    let max = cfg.env.max_instances();
    let runs = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let schedule = arrivals_with(trace, &mut stream_rng(cfg.seed, rng::stream::EVAL_ARRIVALS, rep));
            entrants
                .iter()
                .map(|c| {
                    let mut policy: Box<dyn ScalingPolicy + '_> = match *c {
                        Contender::Rl => Box::new(GreedyAgent::new(table.expect("checked above"), max)),
                        Contender::Hpa => Box::new(Hpa::new(hpa.clone())?),
                        Contender::KeepAlive(p) => Box::new(KeepAlive::new(p, max)?),
                    };
                    Ok(run_timeframe(&cfg.env, &schedule, policy.as_mut(), cfg.seed)?.report)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport::assemble(cfg.seed, trace, runs))
}

/// Where `compare` looks for the Q-table when none is configured.
pub fn qtable_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.qtable.clone().unwrap_or_else(|| cfg.out.join("qtable.csv"))
}

/// Loads the trained table, runs the comparison and writes `compare.csv`,
/// `compare.json` and `manifest.txt`. Never trains.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let trace = load_demand(cfg)?;
    let table = if contenders(cfg).contains(&Contender::Rl) {
        Some(QTable::load(&qtable_path(cfg))?)
    } else {
        None
    };
    let report = evaluate_policies(cfg, &trace, table.as_ref())?;
    ensure_dir(&cfg.out)?;
    write_file(&cfg.out.join("compare.csv"), &report.to_csv())?;
    write_file(&cfg.out.join("compare.json"), &report.to_json())?;
    write_file(&cfg.out.join("manifest.txt"), &manifest_text("compare", cfg))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::WINDOW_CSV_HEADER;

    #[test]
    fn header_extends_window_header() {
        assert_eq!(COMPARE_CSV_HEADER, format!("policy,rep,{WINDOW_CSV_HEADER}"));
    }

    #[test]
    fn baselines_without_table() {
        let mut cfg = ExperimentConfig::default();
        cfg.reps = 3;
        cfg.policy = PolicySelection::KeepAlive;
        let trace = load_demand(&cfg).unwrap();
        let report = evaluate_policies(&cfg, &trace, None).unwrap();
        assert_eq!(report.runs.len(), 3);
        assert_eq!(report.policies.len(), 2);
        assert!(report.deltas.is_empty());
        let ka7 = report.summary("keepalive-7").unwrap();
        assert_eq!(ka7.arrivals, 300);
        assert_eq!(ka7.cold_starts, 18);
        // 4 policies x windows rows would need rl; here 2 x 3 reps x 5 windows
        assert_eq!(report.to_csv().lines().count(), 1 + 2 * 3 * 5);
    }

    #[test]
    fn rl_requires_table() {
        let cfg = ExperimentConfig::default();
        let trace = load_demand(&cfg).unwrap();
        assert!(matches!(evaluate_policies(&cfg, &trace, None), Err(Error::Config(_))));
    }

    #[test]
    fn untrained_agent_compares_against_every_baseline() {
        let mut cfg = ExperimentConfig::default();
        cfg.reps = 2;
        let trace = load_demand(&cfg).unwrap();
        let q = QTable::new();
        let report = evaluate_policies(&cfg, &trace, Some(&q)).unwrap();
        let names: Vec<&str> = report.policies.iter().map(|p| p.policy.as_str()).collect();
        assert_eq!(names, ["rl", "hpa", "keepalive-4", "keepalive-7"]);
        assert_eq!(report.deltas.len(), 3);
        // an untrained agent holds one warm instance: no cold starts
        assert_eq!(report.summary("rl").unwrap().cold_starts, 0);
        assert_eq!(report.delta("keepalive-7").unwrap().cold_start_diff, 12);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["policies"].as_array().unwrap().len(), 4);
    }
}
