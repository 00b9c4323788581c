//! Flat `key=value` experiment configuration. Keys match the command-line
//! flag names, so a written manifest can be fed straight back as `--config`.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::policies::HpaConfig;
use crate::qlearn::{Hyperparams, RewardUnits};
use crate::runner::Environment;
use crate::workload::Pattern;

/// Which policies a command should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicySelection {
    All,
    Rl,
    Hpa,
    KeepAlive,
}

impl FromStr for PolicySelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(PolicySelection::All),
            "rl" => Ok(PolicySelection::Rl),
            "hpa" => Ok(PolicySelection::Hpa),
            "keepalive" => Ok(PolicySelection::KeepAlive),
            other => Err(Error::Config(format!(
                "unknown policy {other:?} (all, rl, hpa, keepalive)"
            ))),
        }
    }
}

impl fmt::Display for PolicySelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicySelection::All => "all",
            PolicySelection::Rl => "rl",
            PolicySelection::Hpa => "hpa",
            PolicySelection::KeepAlive => "keepalive",
        })
    }
}

/// Whether a trace file holds one count per window or one per minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Window,
    Minute,
}

impl FromStr for Granularity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window" => Ok(Granularity::Window),
            "minute" => Ok(Granularity::Minute),
            other => Err(Error::Config(format!(
                "unknown trace granularity {other:?} (window, minute)"
            ))),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Window => "window",
            Granularity::Minute => "minute",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: Environment,
    /// Explicit timeframe; must equal windows x window duration when set.
    pub timeframe: Option<f64>,
    /// Demand is rescaled to this many requests per timeframe.
    pub total_requests: u64,
    /// Trace file; the bundled per-minute sample when unset.
    pub trace: Option<PathBuf>,
    pub trace_granularity: Granularity,
    /// Synthetic demand instead of a trace file.
    pub pattern: Option<Pattern>,
    pub epochs: u64,
    pub seed: u64,
    pub policy: PolicySelection,
    pub pool_sizes: Vec<u32>,
    pub fixed_arrivals: bool,
    pub reps: u32,
    pub qtable: Option<PathBuf>,
    pub out: PathBuf,
    pub hyper: Hyperparams,
    pub hpa_target: f64,
    pub hpa_sync: f64,
    pub hpa_stabilization: f64,
    pub hpa_tolerance: f64,
    pub hpa_stabilize: bool,
    pub hpa_idle_retirement: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let hpa = HpaConfig::default();
        ExperimentConfig {
            env: Environment::default(),
            timeframe: None,
            total_requests: 100,
            trace: None,
            trace_granularity: Granularity::Window,
            pattern: None,
            epochs: 500,
            seed: 42,
            policy: PolicySelection::All,
            pool_sizes: vec![4, 7],
            fixed_arrivals: false,
            reps: 12,
            qtable: None,
            out: PathBuf::from("out"),
            hyper: Hyperparams::default(),
            hpa_target: hpa.target_phi,
            hpa_sync: hpa.sync_period,
            hpa_stabilization: hpa.stabilization,
            hpa_tolerance: hpa.tolerance,
            hpa_stabilize: hpa.stabilize,
            hpa_idle_retirement: hpa.idle_window.is_some(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl ExperimentConfig {
    /// Reads a config file over the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.merge_text(&text)?;
        Ok(cfg)
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(message) => Error::Parse { line: i + 1, message },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Applies one `KEY=VALUE` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {pair:?}")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.env.cluster;
        let h = &mut self.hyper;
        match key {
            "max-instances" => c.max_instances = parse(key, value)?,
            "cold-start" => c.cold_start = parse(key, value)?,
            "service-time" => c.service_time = parse(key, value)?,
            "timeout" => c.timeout = parse(key, value)?,
            "idle-window" => c.idle_window = parse(key, value)?,
            "concurrency" => c.concurrency = parse(key, value)?,
            "initial-instances" => self.env.initial_instances = parse(key, value)?,
            "windows" => self.env.windows = parse(key, value)?,
            "window-duration" => self.env.window_duration = parse(key, value)?,
            "timeframe" => {
                self.timeframe = if value.is_empty() { None } else { Some(parse(key, value)?) }
            }
            "total-requests" => self.total_requests = parse(key, value)?,
            "trace" => self.trace = optional_path(value),
            "trace-granularity" => self.trace_granularity = value.parse()?,
            "pattern" => {
                self.pattern = if value.is_empty() { None } else { Some(value.parse()?) }
            }
            "epochs" => self.epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "policy" => self.policy = value.parse()?,
            "pool-sizes" => {
                self.pool_sizes = value
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "fixed-arrivals" => self.fixed_arrivals = parse_bool(key, value)?,
            "reps" => self.reps = parse(key, value)?,
            "qtable" => self.qtable = optional_path(value),
            "out" => self.out = PathBuf::from(value),
            "alpha" => h.alpha = parse(key, value)?,
            "gamma" => h.gamma = parse(key, value)?,
            "decay-rate" => h.decay_rate = parse(key, value)?,
            "epsilon-floor" => h.epsilon_floor = parse(key, value)?,
            "epsilon-span" => h.epsilon_span = parse(key, value)?,
            "phi-target" => h.phi_target = parse(key, value)?,
            "tau-target" => h.tau_target = parse(key, value)?,
            "reward-units" => h.units = value.parse::<RewardUnits>()?,
            "hpa-target" => self.hpa_target = parse(key, value)?,
            "hpa-sync" => self.hpa_sync = parse(key, value)?,
            "hpa-stabilization" => self.hpa_stabilization = parse(key, value)?,
            "hpa-tolerance" => self.hpa_tolerance = parse(key, value)?,
            "hpa-stabilize" => self.hpa_stabilize = parse_bool(key, value)?,
            "hpa-idle-retirement" => self.hpa_idle_retirement = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn timeframe(&self) -> f64 {
        self.timeframe.unwrap_or_else(|| self.env.timeframe())
    }

    pub fn hpa_config(&self) -> HpaConfig {
        HpaConfig {
            target_phi: self.hpa_target,
            sync_period: self.hpa_sync,
            stabilization: self.hpa_stabilization,
            tolerance: self.hpa_tolerance,
            max_instances: self.env.cluster.max_instances,
            stabilize: self.hpa_stabilize,
            idle_window: self.hpa_idle_retirement.then_some(self.env.cluster.idle_window),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.cluster.validate()?;
        self.hyper.validate()?;
        if self.env.windows == 0 {
            return Err(Error::Config("windows must be at least 1".into()));
        }
        if !(self.env.window_duration > 0.0 && self.env.window_duration.is_finite()) {
            return Err(Error::Config("window-duration must be positive".into()));
        }
        if let Some(t) = self.timeframe {
            if (t - self.env.timeframe()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "timeframe {t} s is not windows x window-duration = {} s",
                    self.env.timeframe()
                )));
            }
        }
        let max = self.env.cluster.max_instances;
        if self.env.initial_instances < 1 || self.env.initial_instances > max {
            return Err(Error::Config(format!("initial-instances must be in [1, {max}]")));
        }
        if self.pool_sizes.iter().any(|&p| p < 1 || p > max) {
            return Err(Error::Config(format!("pool-sizes must lie in [1, {max}]")));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.trace_granularity == Granularity::Minute {
            let per = self.env.window_duration / 60.0;
            if per.fract() != 0.0 {
                return Err(Error::Config(
                    "per-minute traces need window-duration to be a whole number of minutes".into(),
                ));
            }
        }
        crate::policies::Hpa::new(self.hpa_config())?;
        Ok(())
    }

    /// Every key with its current value, in a stable order.
    pub fn to_manifest(&self) -> String {
        let c = &self.env.cluster;
        let h = &self.hyper;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let pools: Vec<String> = self.pool_sizes.iter().map(|p| p.to_string()).collect();
        let pairs: Vec<(&str, String)> = vec![
            ("max-instances", c.max_instances.to_string()),
            ("cold-start", c.cold_start.to_string()),
            ("service-time", c.service_time.to_string()),
            ("timeout", c.timeout.to_string()),
            ("idle-window", c.idle_window.to_string()),
            ("concurrency", c.concurrency.to_string()),
            ("initial-instances", self.env.initial_instances.to_string()),
            ("timeframe", self.timeframe().to_string()),
            ("windows", self.env.windows.to_string()),
            ("window-duration", self.env.window_duration.to_string()),
            ("total-requests", self.total_requests.to_string()),
            ("trace", path(&self.trace)),
            ("trace-granularity", self.trace_granularity.to_string()),
            ("pattern", self.pattern.map(|p| p.to_string()).unwrap_or_default()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("policy", self.policy.to_string()),
            ("pool-sizes", pools.join(",")),
            ("fixed-arrivals", self.fixed_arrivals.to_string()),
            ("reps", self.reps.to_string()),
            ("qtable", path(&self.qtable)),
            ("out", self.out.display().to_string()),
            ("alpha", h.alpha.to_string()),
            ("gamma", h.gamma.to_string()),
            ("decay-rate", h.decay_rate.to_string()),
            ("epsilon-floor", h.epsilon_floor.to_string()),
            ("epsilon-span", h.epsilon_span.to_string()),
            ("phi-target", h.phi_target.to_string()),
            ("tau-target", h.tau_target.to_string()),
            ("reward-units", h.units.to_string()),
            ("hpa-target", self.hpa_target.to_string()),
            ("hpa-sync", self.hpa_sync.to_string()),
            ("hpa-stabilization", self.hpa_stabilization.to_string()),
            ("hpa-tolerance", self.hpa_tolerance.to_string()),
            ("hpa-stabilize", self.hpa_stabilize.to_string()),
            ("hpa-idle-retirement", self.hpa_idle_retirement.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }
}
