//! Drives one timeframe of the simulator under a scaling policy.

use crate::error::{Error, Result};
use crate::metrics::{window_phi, window_tau, RunReport, WindowMetrics};
use crate::policies::{kubeless_idle_scale_down, PolicyObservation, ScalingPolicy, WindowObservation};
use crate::sim::{ClusterConfig, EventKind, SimEvent, SimTime, Simulator, Span, Tally};
use crate::workload::{ArrivalSchedule, Trace};

/// Everything needed to build a fresh simulator for one timeframe.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Environment {
    pub cluster: ClusterConfig,
    pub windows: u32,
    pub window_duration: f64,
    pub initial_instances: u32,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            cluster: ClusterConfig::default(),
            windows: 5,
            window_duration: 120.0,
            initial_instances: 1,
        }
    }
}

impl Environment {
    pub fn timeframe(&self) -> f64 {
        self.windows as f64 * self.window_duration
    }

    pub fn max_instances(&self) -> u32 {
        self.cluster.max_instances
    }

    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(self.cluster.clone(), self.initial_instances)
    }

    pub fn window_span(&self, index: u32) -> Span {
        Span::secs(
            index as f64 * self.window_duration,
            (index + 1) as f64 * self.window_duration,
        )
    }

    /// Checks that a trace lines up with this environment's windows.
    pub fn check_trace(&self, trace: &Trace) -> Result<()> {
        if trace.windows() != self.windows as usize {
            return Err(Error::Config(format!(
                "trace has {} windows, environment expects {}",
                trace.windows(),
                self.windows
            )));
        }
        if (trace.window_duration - self.window_duration).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "trace window {} s differs from environment window {} s",
                trace.window_duration, self.window_duration
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    /// Final per-window metrics, with every request resolved.
    pub report: RunReport,
    /// Metrics as observed at each window boundary (resolved-so-far).
    pub at_boundary: Vec<WindowMetrics>,
    /// Outcome tallies at each boundary, including time zero.
    pub tallies: Vec<Tally>,
    pub events: Vec<SimEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Control {
    Tick,
    Boundary(u32),
}

fn control_points(env: &Environment, sync: Option<f64>) -> Vec<(SimTime, Control)> {
    let end = env.timeframe();
    let mut points: Vec<(SimTime, Control)> = (0..=env.windows)
        .map(|k| (SimTime::from_secs(k as f64 * env.window_duration), Control::Boundary(k)))
        .collect();
    if let Some(period) = sync {
        let mut k = 1u64;
        loop {
            let t = k as f64 * period;
            if t >= end {
                break;
            }
            points.push((SimTime::from_secs(t), Control::Tick));
            k += 1;
        }
    }
    // ticks before boundaries at equal instants, matching marker priority
    points.sort_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| match (a.1, b.1) {
            (Control::Tick, Control::Boundary(_)) => std::cmp::Ordering::Less,
            (Control::Boundary(_), Control::Tick) => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Equal,
        })
    });
    points
}

fn check_bounds(sim: &Simulator) -> Result<()> {
    let live = sim.live_count();
    if live < 1 || live > sim.config().max_instances {
        return Err(Error::Invariant(format!(
            "{live} live instances at {} outside [1, {}]",
            sim.clock(),
            sim.config().max_instances
        )));
    }
    Ok(())
}

/// Replays `schedule` for one timeframe under `policy`, then lets outstanding
/// requests resolve.
pub fn run_timeframe(
    env: &Environment,
    schedule: &ArrivalSchedule,
    policy: &mut dyn ScalingPolicy,
    seed: u64,
) -> Result<Episode> {
    let mut sim = env.simulator()?;
    sim.load_arrivals(schedule.times());
    let max = env.max_instances();
    let mut events = Vec::new();
    let mut at_boundary = Vec::with_capacity(env.windows as usize);
    let mut tallies = Vec::with_capacity(env.windows as usize + 1);

    for (at, control) in control_points(env, policy.sync_period()) {
        match control {
            Control::Tick => {
                sim.schedule_marker(EventKind::ControlTick, at, 0);
                events.extend(sim.advance_until(at));
                let period = policy.sync_period().unwrap_or(env.window_duration);
                let window_start = (at.secs() / env.window_duration).floor() * env.window_duration;
                let ledgers = sim.ledgers();
                let obs = PolicyObservation {
                    at,
                    n_hat: sim.live_count(),
                    phi_instant: window_phi(&ledgers, &Span::secs((at.secs() - period).max(0.0), at.secs())),
                    tau_window_so_far: window_tau(sim.requests(), &Span::secs(window_start, at.secs())),
                };
                let target = policy.on_tick(&obs);
                if let Some(idle) = policy.idle_retirement() {
                    let expired = kubeless_idle_scale_down(sim.instances(), at, idle);
                    sim.retire_instances(&expired);
                }
                if let Some(target) = target {
                    let live = sim.live_count();
                    // idle retirement may already have gone below a hold decision
                    if target.get() > obs.n_hat || target.get() < live {
                        sim.scale_to(target.get().min(max), at)?;
                    }
                }
                check_bounds(&sim)?;
            }
            Control::Boundary(k) => {
                sim.schedule_marker(EventKind::WindowBoundary, at, k);
                events.extend(sim.advance_until(at));
                let tally = sim.tally();
                if !tally.is_conserved() {
                    return Err(Error::Invariant(format!("request conservation broken at {at}: {tally:?}")));
                }
                tallies.push(tally);
                let previous = (k > 0).then(|| WindowMetrics::capture(&sim, k - 1, &env.window_span(k - 1)));
                if let Some(p) = &previous {
                    at_boundary.push(p.clone());
                }
                let obs = WindowObservation {
                    at,
                    index: k,
                    windows: env.windows,
                    n_hat: sim.live_count(),
                    previous,
                };
                let target = policy.on_window(&obs);
                if k < env.windows {
                    if let Some(target) = target {
                        sim.scale_to(target.get(), at)?;
                    }
                }
                check_bounds(&sim)?;
            }
        }
    }

    events.extend(sim.run_to_completion());
    if sim.tally().pending != 0 {
        return Err(Error::Invariant("requests left unresolved after drain".into()));
    }
    let windows = at_boundary
        .iter()
        .map(|b| {
            let mut w = WindowMetrics::capture(&sim, b.window, &env.window_span(b.window));
            w.n_hat = b.n_hat;
            w
        })
        .collect();
    Ok(Episode {
        report: RunReport::new(policy.label(), seed, windows),
        at_boundary,
        tallies,
        events,
    })
}
