//! Invocation traces: per-window request counts, rescaling to cluster
//! capacity, and expansion into seeded arrival timestamps.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::sim::SimTime;

/// Request counts per iteration window.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub window_duration: f64,
    pub counts: Vec<u64>,
}

impl Trace {
    pub fn new(window_duration: f64, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if !(window_duration > 0.0 && window_duration.is_finite()) {
            return Err(Error::Config("window duration must be positive".into()));
        }
        Ok(Trace {
            window_duration,
            counts,
        })
    }

    pub fn windows(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// One count per line under a `count` header; `parse_trace` reads it back.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("count\n");
        for c in &self.counts {
            writeln!(out, "{c}").unwrap();
        }
        out
    }

    /// Sums consecutive groups of `per_window` entries (e.g. minutes) into
    /// one window each; a short tail group becomes its own window.
    pub fn regroup(&self, per_window: usize, window_duration: f64) -> Result<Trace> {
        if per_window == 0 {
            return Err(Error::Config("group size must be at least 1".into()));
        }
        let counts = self.counts.chunks(per_window).map(|c| c.iter().sum()).collect();
        Trace::new(window_duration, counts)
    }
}

/// Reads one non-negative integer per line. A non-numeric first line is
/// treated as a header; blank lines are ignored.
pub fn parse_trace(text: &str, window_duration: f64) -> Result<Trace> {
    let mut counts = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let token = raw.trim();
        if token.is_empty() {
            continue;
        }
        match token.parse::<u64>() {
            Ok(v) => counts.push(v),
            Err(_) if line == 1 && token.parse::<f64>().is_err() => continue,
            Err(_) => {
                let message = match token.parse::<i64>() {
                    Ok(v) if v < 0 => format!("negative count {v}"),
                    _ => format!("expected a non-negative integer, found {token:?}"),
                };
                return Err(Error::Parse { line, message });
            }
        }
    }
    Trace::new(window_duration, counts)
}

/// Splits `total` across `weights` proportionally with largest-remainder
/// rounding; ties go to the earlier index. Zero weights always get zero.
pub fn apportion(weights: &[u64], total: u64) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut out = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let scaled = w as u128 * total as u128;
        out.push((scaled / sum) as u64);
        remainders.push((scaled % sum, i));
    }
    let leftover = total - out.iter().sum::<u64>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(leftover as usize) {
        out[i] += 1;
    }
    out
}

/// Rescales counts so they sum to exactly `target_total`.
pub fn downscale(trace: &Trace, target_total: u64) -> Result<Trace> {
    if trace.total() == 0 {
        return Err(Error::ZeroTotal);
    }
    Trace::new(trace.window_duration, apportion(&trace.counts, target_total))
}

/// Arrival timestamps, sorted, each tagged with its window.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSchedule {
    pub window_duration: f64,
    pub arrivals: Vec<(SimTime, u32)>,
}

impl ArrivalSchedule {
    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = SimTime> + '_ {
        self.arrivals.iter().map(|&(t, _)| t)
    }

    pub fn count_in_window(&self, window: u32) -> usize {
        self.arrivals.iter().filter(|&&(_, w)| w == window).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp_seconds,window_index\n");
        for (t, w) in &self.arrivals {
            writeln!(out, "{},{w}", t.secs()).unwrap();
        }
        out
    }
}

/// Draws each window's arrivals uniformly over that window.
pub fn to_arrivals(trace: &Trace, seed: u64) -> ArrivalSchedule {
    let mut rng = rng::stream_rng(seed, 0, 0);
    arrivals_with(trace, &mut rng)
}

pub(crate) fn arrivals_with(trace: &Trace, rng: &mut SimRng) -> ArrivalSchedule {
    let dt = trace.window_duration;
    let mut arrivals = Vec::with_capacity(trace.total() as usize);
    for (k, &count) in trace.counts.iter().enumerate() {
        let start = k as f64 * dt;
        let end = start + dt;
        let mut window: Vec<f64> = (0..count).map(|_| rng.gen_range(start..end)).collect();
        window.sort_by(f64::total_cmp);
        arrivals.extend(window.into_iter().map(|t| (SimTime::from_secs(t), k as u32)));
    }
    ArrivalSchedule {
        window_duration: dt,
        arrivals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Constant,
    Ramp,
    Spike,
}

impl std::str::FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Pattern::Constant),
            "ramp" => Ok(Pattern::Ramp),
            "spike" => Ok(Pattern::Spike),
            other => Err(Error::Config(format!(
                "unknown pattern {other:?} (constant, ramp, spike)"
            ))),
        }
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pattern::Constant => "constant",
            Pattern::Ramp => "ramp",
            Pattern::Spike => "spike",
        })
    }
}

pub fn synthetic(pattern: Pattern, windows: usize, total: u64, window_duration: f64) -> Result<Trace> {
    if windows == 0 {
        return Err(Error::EmptyTrace);
    }
    let counts = match pattern {
        Pattern::Constant => apportion(&vec![1; windows], total),
        Pattern::Ramp => apportion(&(1..=windows as u64).collect::<Vec<_>>(), total),
        Pattern::Spike => {
            let mut c = vec![0; windows];
            c[windows / 2] = total;
            c
        }
    };
    Trace::new(window_duration, counts)
}
