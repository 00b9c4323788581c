//! Scaling-policy contract and the reactive baselines.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::metrics::WindowMetrics;
use crate::sim::{FunctionInstance, InstanceId, Phase, SimTime};

/// Metrics visible to a periodically polled controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyObservation {
    pub at: SimTime,
    pub n_hat: u32,
    /// Busy fraction over the last sync period, percent.
    pub phi_instant: f64,
    pub tau_window_so_far: f64,
}

/// State handed to a policy at an iteration-window boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowObservation {
    pub at: SimTime,
    /// Index of the window about to start; equals `windows` at the end of the
    /// timeframe, when no further action is applied.
    pub index: u32,
    pub windows: u32,
    pub n_hat: u32,
    /// Metrics of the window that just closed.
    pub previous: Option<WindowMetrics>,
}

impl WindowObservation {
    pub fn is_final(&self) -> bool {
        self.index >= self.windows
    }
}

/// Desired instance count, always within `[1, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ScaleTarget(u32);

impl ScaleTarget {
    pub fn new(desired: u32, max: u32) -> Result<Self> {
        if desired < 1 || desired > max {
            return Err(Error::TargetOutOfRange {
                target: desired as i64,
                max,
            });
        }
        Ok(ScaleTarget(desired))
    }

    pub fn clamped(desired: i64, max: u32) -> Self {
        ScaleTarget(desired.clamp(1, max as i64) as u32)
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

pub trait ScalingPolicy {
    fn label(&self) -> String;

    /// Period of `on_tick` calls, if the policy polls.
    fn sync_period(&self) -> Option<f64> {
        None
    }

    /// Idle period after which the platform retires instances under this policy.
    fn idle_retirement(&self) -> Option<f64> {
        None
    }

    fn on_tick(&mut self, _obs: &PolicyObservation) -> Option<ScaleTarget> {
        None
    }

    fn on_window(&mut self, _obs: &WindowObservation) -> Option<ScaleTarget> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HpaConfig {
    pub target_phi: f64,
    pub sync_period: f64,
    pub stabilization: f64,
    pub tolerance: f64,
    pub max_instances: u32,
    /// Apply the scale-down stabilization window.
    pub stabilize: bool,
    /// Also retire instances idle longer than this (the platform default).
    pub idle_window: Option<f64>,
}

impl Default for HpaConfig {
    fn default() -> Self {
        HpaConfig {
            target_phi: 75.0,
            sync_period: 15.0,
            stabilization: 300.0,
            tolerance: 0.10,
            max_instances: 7,
            stabilize: true,
            idle_window: Some(300.0),
        }
    }
}

/// Unstabilized recommendation: `ceil(n * phi / target)` outside the tolerance
/// band, `n` inside it, clamped to `[1, max]`.
pub fn hpa_raw_desired(n_hat: u32, phi: f64, cfg: &HpaConfig) -> u32 {
    let phi = phi.clamp(0.0, 100.0);
    let ratio = phi / cfg.target_phi;
    let raw = if (ratio - 1.0).abs() <= cfg.tolerance {
        n_hat as i64
    } else {
        (n_hat as f64 * ratio).ceil() as i64
    };
    raw.clamp(1, cfg.max_instances as i64) as u32
}

/// Kubernetes-style horizontal autoscaler on average busy fraction.
#[derive(Debug, Clone)]
pub struct Hpa {
    cfg: HpaConfig,
    history: VecDeque<(SimTime, u32)>,
}

impl Hpa {
    pub fn new(cfg: HpaConfig) -> Result<Self> {
        if !(cfg.target_phi > 0.0 && cfg.target_phi <= 100.0) {
            return Err(Error::Config("hpa-target must be in (0, 100]".into()));
        }
        if !(cfg.sync_period > 0.0) {
            return Err(Error::Config("hpa-sync must be positive".into()));
        }
        if !(cfg.stabilization >= 0.0 && cfg.tolerance >= 0.0) {
            return Err(Error::Config("hpa-stabilization and hpa-tolerance must be non-negative".into()));
        }
        Ok(Hpa {
            cfg,
            history: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &HpaConfig {
        &self.cfg
    }

    /// Scale-ups apply at once; scale-downs go no lower than the highest
    /// recommendation seen during the trailing stabilization window.
    pub fn decide(&mut self, obs: &PolicyObservation) -> ScaleTarget {
        let raw = hpa_raw_desired(obs.n_hat, obs.phi_instant, &self.cfg);
        let horizon = obs.at.secs() - self.cfg.stabilization;
        while self.history.front().is_some_and(|&(t, _)| t.secs() < horizon) {
            self.history.pop_front();
        }
        self.history.push_back((obs.at, raw));
        let desired = if raw > obs.n_hat || !self.cfg.stabilize {
            raw
        } else {
            let peak = self.history.iter().map(|&(_, r)| r).max().unwrap_or(raw);
            peak.min(obs.n_hat)
        };
        ScaleTarget::clamped(desired as i64, self.cfg.max_instances)
    }
}

impl ScalingPolicy for Hpa {
    fn label(&self) -> String {
        "hpa".into()
    }

    fn sync_period(&self) -> Option<f64> {
        Some(self.cfg.sync_period)
    }

    fn idle_retirement(&self) -> Option<f64> {
        self.cfg.idle_window
    }

    fn on_tick(&mut self, obs: &PolicyObservation) -> Option<ScaleTarget> {
        Some(self.decide(obs))
    }
}

/// Fixed pool of warm instances.
#[derive(Debug, Clone, Copy)]
pub struct KeepAlive {
    pool: ScaleTarget,
}

impl KeepAlive {
    pub fn new(pool_size: u32, max_instances: u32) -> Result<Self> {
        let pool = ScaleTarget::new(pool_size, max_instances)
            .map_err(|_| Error::Config(format!("pool size {pool_size} outside [1, {max_instances}]")))?;
        Ok(KeepAlive { pool })
    }

    pub fn decide(&self) -> ScaleTarget {
        self.pool
    }
}

impl ScalingPolicy for KeepAlive {
    fn label(&self) -> String {
        format!("keepalive-{}", self.pool.get())
    }

    fn on_window(&mut self, _obs: &WindowObservation) -> Option<ScaleTarget> {
        Some(self.pool)
    }
}

/// Instances idle for longer than `idle_window`, longest-idle first, never
/// leaving fewer than one live instance.
pub fn kubeless_idle_scale_down(
    instances: &[FunctionInstance],
    now: SimTime,
    idle_window: f64,
) -> Vec<InstanceId> {
    let live = instances.iter().filter(|i| i.is_live()).count();
    let mut idle: Vec<&FunctionInstance> = instances
        .iter()
        .filter(|i| {
            i.is_live()
                && i.phase == Phase::Ready
                && !i.is_busy()
                && i.queue.is_empty()
                && now - i.idle_since > idle_window
        })
        .collect();
    idle.sort_by_key(|i| (i.idle_since, i.id));
    idle.into_iter()
        .take(live.saturating_sub(1))
        .map(|i| i.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ClusterConfig, Simulator};
    use proptest::prelude::*;

    fn obs(at: f64, n_hat: u32, phi: f64) -> PolicyObservation {
        PolicyObservation {
            at: SimTime::from_secs(at),
            n_hat,
            phi_instant: phi,
            tau_window_so_far: 0.0,
        }
    }

    #[test]
    fn hpa_at_target_holds() {
        let mut h = Hpa::new(HpaConfig::default()).unwrap();
        assert_eq!(h.decide(&obs(15.0, 2, 75.0)).get(), 2);
    }

    #[test]
    fn hpa_overload_clamped_before_formula() {
        let mut h = Hpa::new(HpaConfig::default()).unwrap();
        assert_eq!(h.decide(&obs(15.0, 2, 150.0)).get(), 3);
    }

    #[test]
    fn hpa_stabilization_blocks_scale_down() {
        let mut h = Hpa::new(HpaConfig::default()).unwrap();
        assert_eq!(h.decide(&obs(0.0, 4, 75.0)).get(), 4);
        assert_eq!(h.decide(&obs(150.0, 4, 10.0)).get(), 4);
        assert_eq!(h.decide(&obs(300.0, 4, 10.0)).get(), 4);
        // the reading of 4 at t=0 has left the window; t=150 recommended 1
        assert_eq!(h.decide(&obs(301.0, 4, 10.0)).get(), 1);
    }

    #[test]
    fn hpa_without_stabilization_drops_immediately() {
        let mut h = Hpa::new(HpaConfig {
            stabilize: false,
            ..HpaConfig::default()
        })
        .unwrap();
        h.decide(&obs(0.0, 4, 75.0));
        assert_eq!(h.decide(&obs(15.0, 4, 10.0)).get(), 1);
    }

    #[test]
    fn keepalive_is_constant() {
        for pool in [7, 4, 1] {
            let mut k = KeepAlive::new(pool, 7).unwrap();
            for i in 0..6 {
                let o = WindowObservation {
                    at: SimTime::from_secs(i as f64 * 120.0),
                    index: i,
                    windows: 5,
                    n_hat: 1,
                    previous: None,
                };
                assert_eq!(k.on_window(&o).unwrap().get(), pool);
            }
        }
        assert!(matches!(KeepAlive::new(0, 7), Err(Error::Config(_))));
        assert!(matches!(KeepAlive::new(8, 7), Err(Error::Config(_))));
    }

    #[test]
    fn idle_retirement_rules() {
        let t = SimTime::from_secs;
        let mut sim = Simulator::new(ClusterConfig::default(), 3).unwrap();
        sim.advance_until(t(0.0));
        sim.submit_request(t(0.0)).unwrap();
        sim.advance_until(t(400.0));
        // all idle past 300 s (the busy one since t=20): keep one
        assert_eq!(kubeless_idle_scale_down(sim.instances(), t(400.0), 300.0).len(), 2);
        assert_eq!(kubeless_idle_scale_down(sim.instances(), t(310.0), 300.0), vec![1, 2]);

        let sim = Simulator::new(ClusterConfig::default(), 1).unwrap();
        assert!(kubeless_idle_scale_down(sim.instances(), t(600.0), 300.0).is_empty());

        let mut sim = Simulator::new(ClusterConfig::default(), 2).unwrap();
        sim.submit_request(t(0.0)).unwrap();
        sim.submit_request(t(0.0)).unwrap();
        assert!(kubeless_idle_scale_down(sim.instances(), t(0.0), 0.0).is_empty());
    }

    proptest! {
        #[test]
        fn hpa_target_always_in_bounds(
            readings in prop::collection::vec((1u32..=7, 0.0f64..250.0), 1..40)
        ) {
            let mut h = Hpa::new(HpaConfig::default()).unwrap();
            for (k, (n, phi)) in readings.into_iter().enumerate() {
                let d = h.decide(&obs(15.0 * k as f64, n, phi)).get();
                prop_assert!((1..=7).contains(&d));
            }
        }

        #[test]
        fn hpa_at_target_never_moves(n in 1u32..=7, t in 0.0f64..1e4) {
            let mut h = Hpa::new(HpaConfig::default()).unwrap();
            prop_assert_eq!(h.decide(&obs(t, n, 75.0)).get(), n);
        }
    }
}
