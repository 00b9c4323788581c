use std::collections::VecDeque;

use super::time::{SimTime, Span};
use crate::error::{Error, Result};

pub type InstanceId = u32;
pub type RequestId = u32;

/// Static parameters of the simulated function deployment.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClusterConfig {
    /// Upper bound on live instances.
    pub max_instances: u32,
    /// Provisioning delay of a fresh instance.
    pub cold_start: f64,
    /// Deterministic execution time of one request.
    pub service_time: f64,
    /// Deadline measured from arrival.
    pub timeout: f64,
    /// Idle period after which the default platform retires an instance.
    pub idle_window: f64,
    pub concurrency: u32,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            max_instances: 7,
            cold_start: 10.0,
            service_time: 20.0,
            timeout: 60.0,
            idle_window: 300.0,
            concurrency: 1,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_instances < 1 {
            return Err(Error::Config("max-instances must be at least 1".into()));
        }
        if !(self.cold_start > 0.0 && self.cold_start.is_finite()) {
            return Err(Error::Config("cold-start must be positive".into()));
        }
        if !(self.service_time > 0.0 && self.service_time.is_finite()) {
            return Err(Error::Config("service-time must be positive".into()));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(Error::Config("timeout must be positive".into()));
        }
        if !(self.idle_window >= 0.0 && self.idle_window.is_finite()) {
            return Err(Error::Config("idle-window must be non-negative".into()));
        }
        if self.concurrency < 1 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    /// True when no request can ever finish before its deadline.
    pub fn every_request_times_out(&self) -> bool {
        self.service_time > self.timeout
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Provisioning,
    Ready,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BusySpan {
    pub request: RequestId,
    pub start: SimTime,
    pub end: Option<SimTime>,
}

/// One function container replica.
#[derive(Debug, Clone)]
pub struct FunctionInstance {
    pub id: InstanceId,
    pub phase: Phase,
    pub created_at: SimTime,
    pub ready_at: SimTime,
    /// Set when the instance has stopped consuming resources.
    pub retired_at: Option<SimTime>,
    /// Retirement requested while a request was still running.
    pub draining: bool,
    pub queue: VecDeque<RequestId>,
    pub running: Vec<RequestId>,
    /// Last time the instance became free of work (or became ready).
    pub idle_since: SimTime,
    /// Provisioned on demand rather than present at start-up.
    pub cold: bool,
    pub(crate) busy: Vec<BusySpan>,
}

impl FunctionInstance {
    pub(crate) fn new(id: InstanceId, created_at: SimTime, ready_at: SimTime, phase: Phase) -> Self {
        FunctionInstance {
            id,
            phase,
            created_at,
            ready_at,
            retired_at: None,
            draining: false,
            queue: VecDeque::new(),
            running: Vec::new(),
            idle_since: ready_at,
            cold: phase == Phase::Provisioning,
            busy: Vec::new(),
        }
    }

    /// Counts toward `n_hat`: not retired and not draining.
    pub fn is_live(&self) -> bool {
        self.retired_at.is_none() && !self.draining
    }

    pub fn is_busy(&self) -> bool {
        !self.running.is_empty()
    }

    pub fn load(&self) -> usize {
        self.queue.len() + self.running.len()
    }

    /// Completion time of the latest running request, if any.
    pub fn busy_until(&self, service_time: f64) -> Option<SimTime> {
        self.busy
            .iter()
            .filter(|b| b.end.is_none())
            .map(|b| b.start + service_time)
            .max()
    }

    /// Seconds of execution inside `window`, with open spans closed at `now`.
    pub fn busy_seconds(&self, window: &Span, now: SimTime) -> f64 {
        self.busy
            .iter()
            .map(|b| {
                let end = b.end.unwrap_or(now).max(b.start);
                window.overlap(&Span::new(b.start, end))
            })
            .sum()
    }

    /// Ready (provisioned, not yet retired) span, clipped at `now`.
    pub fn ready_span(&self, now: SimTime) -> Option<Span> {
        if self.phase != Phase::Ready || self.ready_at > now {
            return None;
        }
        let end = self.retired_at.unwrap_or(now).max(self.ready_at);
        Some(Span::new(self.ready_at, end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Outcome {
    Pending,
    Success,
    TimeoutFailure,
    /// Never admitted to an instance before the deadline.
    RejectedFailure,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::TimeoutFailure | Outcome::RejectedFailure)
    }

    pub fn is_terminal(self) -> bool {
        self != Outcome::Pending
    }
}

/// One invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: RequestId,
    pub arrival: SimTime,
    pub deadline: SimTime,
    pub started: Option<SimTime>,
    pub completed: Option<SimTime>,
    /// Time at which the outcome became terminal.
    pub resolved_at: Option<SimTime>,
    pub outcome: Outcome,
    pub instance: Option<InstanceId>,
}

impl Request {
    pub fn new(id: RequestId, arrival: SimTime, timeout: f64) -> Self {
        Request {
            id,
            arrival,
            deadline: arrival + timeout,
            started: None,
            completed: None,
            resolved_at: None,
            outcome: Outcome::Pending,
            instance: None,
        }
    }
}

/// Which instance, if any, took a newly submitted request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Routing {
    Started(InstanceId),
    Queued(InstanceId),
    /// No live instance existed; parked in the global pending set.
    Parked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScalingReport {
    pub added: u32,
    pub removed: u32,
    pub cold_starts_started: u32,
}

/// Request-outcome counts at a point in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub arrivals: u64,
    pub successes: u64,
    pub failures: u64,
    pub pending: u64,
}

impl Tally {
    pub fn is_conserved(&self) -> bool {
        self.arrivals == self.successes + self.failures + self.pending
    }
}
