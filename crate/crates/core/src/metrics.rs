//! Window and run observables: average utilization (phi), failure rate (tau),
//! instance counts, cold starts and idle wastage.
//!
//! Utilization is execution-time occupancy: busy seconds over ready seconds,
//! per execution slot.

use std::fmt::Write as _;

use serde::Serialize;

use crate::sim::{InstanceLedger, Request, Simulator, Span};

fn clamp_pct(v: f64) -> f64 {
    v.clamp(0.0, 100.0)
}

fn ready_and_busy(ledger: &InstanceLedger, window: &Span) -> (f64, f64) {
    let ready = ledger.ready.map_or(0.0, |r| window.overlap(&r)) * ledger.slots as f64;
    let busy: f64 = ledger.busy.iter().map(|b| window.overlap(b)).sum();
    (ready, busy.min(ready))
}

/// Mean per-instance busy fraction over `window`, in percent. Instances with no
/// ready time in the window are skipped; with none left the result is 0.
pub fn window_phi(ledgers: &[InstanceLedger], window: &Span) -> f64 {
    let (sum, n) = ledgers
        .iter()
        .map(|l| ready_and_busy(l, window))
        .filter(|&(ready, _)| ready > 0.0)
        .fold((0.0, 0usize), |(s, n), (ready, busy)| (s + busy / ready, n + 1));
    if n == 0 {
        0.0
    } else {
        clamp_pct(100.0 * sum / n as f64)
    }
}

/// Percentage of the window's arrivals that have failed so far.
pub fn window_tau(requests: &[Request], window: &Span) -> f64 {
    let (arrivals, failures) = requests
        .iter()
        .filter(|r| window.contains(r.arrival))
        .fold((0u64, 0u64), |(a, f), r| (a + 1, f + r.outcome.is_failure() as u64));
    if arrivals == 0 {
        0.0
    } else {
        clamp_pct(100.0 * failures as f64 / arrivals as f64)
    }
}

/// Total (ready, busy) slot-seconds across every instance in `window`.
pub fn slot_seconds(ledgers: &[InstanceLedger], window: &Span) -> (f64, f64) {
    ledgers
        .iter()
        .map(|l| ready_and_busy(l, window))
        .fold((0.0, 0.0), |(r, b), (lr, lb)| (r + lr, b + lb))
}

fn wastage_of(ready: f64, busy: f64) -> f64 {
    if ready <= 0.0 {
        0.0
    } else {
        (1.0 - busy / ready).clamp(0.0, 1.0)
    }
}

/// `1 - busy / ready` aggregated over every instance in `window`.
pub fn idle_wastage(ledgers: &[InstanceLedger], window: &Span) -> f64 {
    let (ready, busy) = slot_seconds(ledgers, window);
    wastage_of(ready, busy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowMetrics {
    pub window: u32,
    pub phi: f64,
    pub tau: f64,
    pub n_hat: u32,
    pub arrivals: u64,
    pub successes: u64,
    pub failures: u64,
    pub cold_starts: u64,
    pub idle_fraction: f64,
    pub ready_seconds: f64,
    pub busy_seconds: f64,
}

impl WindowMetrics {
    /// Snapshot of window `index` spanning `window`, using outcomes resolved
    /// up to the simulator's clock.
    pub fn capture(sim: &Simulator, index: u32, window: &Span) -> Self {
        let ledgers = sim.ledgers();
        let requests = sim.requests();
        let (ready_seconds, busy_seconds) = slot_seconds(&ledgers, window);
        let mut arrivals = 0;
        let mut successes = 0;
        let mut failures = 0;
        for r in requests.iter().filter(|r| window.contains(r.arrival)) {
            arrivals += 1;
            match r.outcome {
                crate::sim::Outcome::Success => successes += 1,
                o if o.is_failure() => failures += 1,
                _ => {}
            }
        }
        WindowMetrics {
            window: index,
            phi: window_phi(&ledgers, window),
            tau: window_tau(requests, window),
            n_hat: sim.live_count(),
            arrivals,
            successes,
            failures,
            cold_starts: ledgers
                .iter()
                .filter(|l| l.cold && window.contains(l.created_at))
                .count() as u64,
            idle_fraction: wastage_of(ready_seconds, busy_seconds),
            ready_seconds,
            busy_seconds,
        }
    }
}

pub const WINDOW_CSV_HEADER: &str =
    "window,phi,tau,n_hat,arrivals,successes,failures,cold_starts,idle_fraction";

impl WindowMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{},{},{},{},{},{:.6}",
            self.window,
            self.phi,
            self.tau,
            self.n_hat,
            self.arrivals,
            self.successes,
            self.failures,
            self.cold_starts,
            self.idle_fraction
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTotals {
    pub arrivals: u64,
    pub successes: u64,
    pub failures: u64,
    /// Successes as a percentage of arrivals (100 when nothing arrived).
    pub throughput: f64,
    pub failure_rate: f64,
    pub cold_starts: u64,
    pub mean_phi: f64,
    pub mean_idle_fraction: f64,
    /// Idle share of all ready slot-time in the run.
    pub idle_wastage: f64,
}

impl RunTotals {
    pub fn from_windows(windows: &[WindowMetrics]) -> Self {
        let arrivals: u64 = windows.iter().map(|w| w.arrivals).sum();
        let successes: u64 = windows.iter().map(|w| w.successes).sum();
        let failures: u64 = windows.iter().map(|w| w.failures).sum();
        let n = windows.len().max(1) as f64;
        let throughput = if arrivals == 0 {
            100.0
        } else {
            100.0 * successes as f64 / arrivals as f64
        };
        let failure_rate = if arrivals == 0 {
            0.0
        } else {
            100.0 * failures as f64 / arrivals as f64
        };
        RunTotals {
            arrivals,
            successes,
            failures,
            throughput,
            failure_rate,
            cold_starts: windows.iter().map(|w| w.cold_starts).sum(),
            mean_phi: windows.iter().map(|w| w.phi).sum::<f64>() / n,
            mean_idle_fraction: windows.iter().map(|w| w.idle_fraction).sum::<f64>() / n,
            idle_wastage: wastage_of(
                windows.iter().map(|w| w.ready_seconds).sum(),
                windows.iter().map(|w| w.busy_seconds).sum(),
            ),
        }
    }
}

/// Per-window results of one timeframe under one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub policy: String,
    pub seed: u64,
    pub windows: Vec<WindowMetrics>,
    pub totals: RunTotals,
}

impl RunReport {
    pub fn new(policy: impl Into<String>, seed: u64, windows: Vec<WindowMetrics>) -> Self {
        let totals = RunTotals::from_windows(&windows);
        RunReport {
            policy: policy.into(),
            seed,
            windows,
            totals,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{WINDOW_CSV_HEADER}\n");
        for w in &self.windows {
            writeln!(out, "{}", w.csv_row()).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Outcome, SimTime};
    use proptest::prelude::*;

    fn ledger(ready: Option<(f64, f64)>, busy: &[(f64, f64)]) -> InstanceLedger {
        InstanceLedger {
            id: 0,
            created_at: SimTime::ZERO,
            cold: false,
            ready: ready.map(|(a, b)| Span::secs(a, b)),
            busy: busy.iter().map(|&(a, b)| Span::secs(a, b)).collect(),
            slots: 1,
        }
    }

    fn req(arrival: f64, outcome: Outcome) -> Request {
        let mut r = Request::new(0, SimTime::from_secs(arrival), 60.0);
        r.outcome = outcome;
        r
    }

    const W: Span = Span {
        start: SimTime::ZERO,
        end: SimTime::ZERO,
    };

    fn win() -> Span {
        Span::secs(0.0, 120.0)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(window_phi(&[ledger(Some((0.0, 120.0)), &[(0.0, 120.0)])], &win()), 100.0);
        let two = [ledger(Some((0.0, 120.0)), &[(0.0, 60.0)]), ledger(Some((0.0, 120.0)), &[])];
        assert_eq!(window_phi(&two, &win()), 25.0);
        let late = [ledger(Some((80.0, 120.0)), &[(90.0, 110.0)])];
        assert_eq!(window_phi(&late, &win()), 50.0);
        assert_eq!(window_phi(&[ledger(None, &[])], &win()), 0.0);
        assert_eq!(window_phi(&[], &W), 0.0);
    }

    #[test]
    fn tau_examples() {
        let ok: Vec<_> = (0..20).map(|i| req(i as f64, Outcome::Success)).collect();
        assert_eq!(window_tau(&ok, &win()), 0.0);
        let mut mixed = ok.clone();
        for r in mixed.iter_mut().take(5) {
            r.outcome = Outcome::TimeoutFailure;
        }
        assert_eq!(window_tau(&mixed, &win()), 25.0);
        assert_eq!(window_tau(&[], &win()), 0.0);
        // pending does not count as failure yet; out-of-window arrivals ignored
        let partial = [req(1.0, Outcome::Pending), req(2.0, Outcome::RejectedFailure), req(130.0, Outcome::TimeoutFailure)];
        assert_eq!(window_tau(&partial, &win()), 50.0);
    }

    #[test]
    fn wastage_examples() {
        let full = [ledger(Some((0.0, 120.0)), &[(0.0, 120.0)])];
        assert_eq!(idle_wastage(&full, &win()), 0.0);
        let idle = [ledger(Some((0.0, 120.0)), &[]), ledger(Some((0.0, 120.0)), &[])];
        assert_eq!(idle_wastage(&idle, &win()), 1.0);
        let half = [ledger(Some((0.0, 120.0)), &[(0.0, 100.0)]), ledger(Some((0.0, 120.0)), &[(0.0, 20.0)])];
        assert_eq!(idle_wastage(&half, &win()), 0.5);
        assert_eq!(idle_wastage(&[ledger(None, &[])], &win()), 0.0);
    }

    #[test]
    fn totals_follow_windows() {
        let w = |i, a, s, f, ready: f64| WindowMetrics {
            window: i,
            phi: 50.0,
            tau: 0.0,
            n_hat: 2,
            arrivals: a,
            successes: s,
            failures: f,
            cold_starts: 1,
            idle_fraction: 0.5,
            ready_seconds: ready,
            busy_seconds: ready / 2.0,
        };
        let mut long = w(1, 10, 10, 0, 300.0);
        long.busy_seconds = 270.0;
        let r = RunReport::new("x", 1, vec![w(0, 10, 9, 1, 100.0), long]);
        // (100 + 300) ready, (50 + 270) busy
        assert!((r.totals.idle_wastage - 0.2).abs() < 1e-12);
        assert!((r.totals.mean_idle_fraction - 0.5).abs() < 1e-12);
        assert_eq!(r.totals.arrivals, 20);
        assert_eq!(r.totals.failures, 1);
        assert!((r.totals.throughput - 95.0).abs() < 1e-12);
        assert_eq!(r.totals.cold_starts, 2);
        assert!(r.to_csv().starts_with(WINDOW_CSV_HEADER));
        assert_eq!(r.to_csv().lines().count(), 3);
    }

    proptest! {
        #[test]
        fn phi_matches_wastage_when_all_ready(busy in prop::collection::vec(0.0f64..120.0, 1..8)) {
            let ledgers: Vec<_> = busy.iter().map(|&b| ledger(Some((0.0, 120.0)), &[(0.0, b)])).collect();
            let phi = window_phi(&ledgers, &win());
            let waste = idle_wastage(&ledgers, &win());
            prop_assert!((phi / 100.0 - (1.0 - waste)).abs() < 1e-9);
            prop_assert!((0.0..=100.0).contains(&phi));
        }
    }
}
