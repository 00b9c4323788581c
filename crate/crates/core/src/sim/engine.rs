use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use super::time::{SimTime, Span};
use super::types::*;
use crate::error::{Error, Result};

/// Event kinds. Declaration order is the processing priority for events that
/// share a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    ProvisionComplete,
    ExecutionComplete,
    RequestDeadline,
    Arrival,
    ControlTick,
    WindowBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payload {
    None,
    Instance(InstanceId),
    Request(RequestId),
    Execution {
        instance: InstanceId,
        request: RequestId,
    },
    Window(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub at: SimTime,
    pub kind: EventKind,
    pub seq: u64,
    pub payload: Payload,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.at
            .cmp(&other.at)
            .then(self.kind.cmp(&other.kind))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Closed-off view of one instance's lifetime, suitable for metric windows.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceLedger {
    pub id: InstanceId,
    pub created_at: SimTime,
    pub cold: bool,
    pub ready: Option<Span>,
    pub busy: Vec<Span>,
    pub slots: u32,
}

/// Single-threaded discrete-event model of one function deployment.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: ClusterConfig,
    clock: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<SimEvent>>,
    instances: Vec<FunctionInstance>,
    requests: Vec<Request>,
    parked: VecDeque<RequestId>,
    cold_starts: u32,
}

impl Simulator {
    /// Starts with `initial` warm instances, all Ready at time zero.
    pub fn new(cfg: ClusterConfig, initial: u32) -> Result<Self> {
        cfg.validate()?;
        if initial < 1 || initial > cfg.max_instances {
            return Err(Error::TargetOutOfRange {
                target: initial as i64,
                max: cfg.max_instances,
            });
        }
        let instances = (0..initial)
            .map(|id| FunctionInstance::new(id, SimTime::ZERO, SimTime::ZERO, Phase::Ready))
            .collect();
        Ok(Simulator {
            cfg,
            clock: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            instances,
            requests: Vec::new(),
            parked: VecDeque::new(),
            cold_starts: 0,
        })
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.cfg
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn instances(&self) -> &[FunctionInstance] {
        &self.instances
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn cold_starts(&self) -> u32 {
        self.cold_starts
    }

    pub fn live_count(&self) -> u32 {
        self.instances.iter().filter(|i| i.is_live()).count() as u32
    }

    pub fn pending_events(&self) -> usize {
        self.heap.len()
    }

    fn schedule(&mut self, at: SimTime, kind: EventKind, payload: Payload) {
        debug_assert!(at >= self.clock, "event scheduled in the past");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(SimEvent {
            at,
            kind,
            seq,
            payload,
        }));
    }

    /// Queues one Arrival event per timestamp; requests materialize when the
    /// event is processed.
    pub fn load_arrivals<I: IntoIterator<Item = SimTime>>(&mut self, arrivals: I) {
        for at in arrivals {
            assert!(at >= self.clock, "arrival {at} before clock {}", self.clock);
            self.schedule(at, EventKind::Arrival, Payload::None);
        }
    }

    /// Inert marker; processed after every other event at the same instant.
    pub fn schedule_marker(&mut self, kind: EventKind, at: SimTime, window: u32) {
        assert!(matches!(kind, EventKind::ControlTick | EventKind::WindowBoundary));
        self.schedule(at, kind, Payload::Window(window));
    }

    /// Processes every event with `at <= t_stop`, then parks the clock at `t_stop`.
    pub fn advance_until(&mut self, t_stop: SimTime) -> Vec<SimEvent> {
        assert!(t_stop >= self.clock, "cannot rewind from {} to {t_stop}", self.clock);
        let mut processed = Vec::new();
        while let Some(Reverse(ev)) = self.heap.peek().copied() {
            if ev.at > t_stop {
                break;
            }
            self.heap.pop();
            self.clock = ev.at;
            self.dispatch(ev);
            processed.push(ev);
        }
        self.clock = t_stop;
        processed
    }

    /// Runs until the event queue is empty.
    pub fn run_to_completion(&mut self) -> Vec<SimEvent> {
        let mut processed = Vec::new();
        while let Some(Reverse(ev)) = self.heap.pop() {
            self.clock = ev.at;
            self.dispatch(ev);
            processed.push(ev);
        }
        processed
    }

    fn dispatch(&mut self, ev: SimEvent) {
        match (ev.kind, ev.payload) {
            (EventKind::Arrival, _) => {
                self.admit(ev.at);
            }
            (EventKind::ProvisionComplete, Payload::Instance(id)) => self.provision_complete(id),
            (EventKind::ExecutionComplete, Payload::Execution { instance, request }) => {
                self.execution_complete(instance, request)
            }
            (EventKind::RequestDeadline, Payload::Request(id)) => self.deadline(id),
            (EventKind::ControlTick | EventKind::WindowBoundary, _) => {}
            (kind, payload) => unreachable!("malformed event {kind:?} {payload:?}"),
        }
    }

    fn admit(&mut self, arrival: SimTime) -> (RequestId, Routing) {
        let id = self.requests.len() as RequestId;
        self.requests.push(Request::new(id, arrival, self.cfg.timeout));
        let deadline = self.requests[id as usize].deadline;
        self.schedule(deadline, EventKind::RequestDeadline, Payload::Request(id));
        (id, self.route(id))
    }

    /// Admits a request arriving now.
    pub fn submit_request(&mut self, arrival: SimTime) -> Result<(RequestId, Routing)> {
        if arrival != self.clock {
            return Err(Error::Invariant(format!(
                "request arrival {arrival} differs from clock {}",
                self.clock
            )));
        }
        Ok(self.admit(arrival))
    }

    fn route(&mut self, req: RequestId) -> Routing {
        let target = self
            .instances
            .iter()
            .filter(|i| i.is_live())
            .min_by_key(|i| (i.load(), i.id))
            .map(|i| i.id);
        let Some(inst) = target else {
            self.parked.push_back(req);
            return Routing::Parked;
        };
        self.requests[req as usize].instance = Some(inst);
        self.instances[inst as usize].queue.push_back(req);
        self.try_start(inst);
        if self.requests[req as usize].started.is_some() {
            Routing::Started(inst)
        } else {
            Routing::Queued(inst)
        }
    }

    fn try_start(&mut self, inst: InstanceId) {
        let service = self.cfg.service_time;
        let slots = self.cfg.concurrency as usize;
        loop {
            let i = &mut self.instances[inst as usize];
            if i.phase != Phase::Ready || i.retired_at.is_some() || i.running.len() >= slots {
                return;
            }
            let Some(req) = i.queue.pop_front() else {
                return;
            };
            let now = self.clock;
            if self.requests[req as usize].deadline <= now {
                // expires this instant; its deadline event resolves it
                continue;
            }
            i.running.push(req);
            i.busy.push(BusySpan {
                request: req,
                start: now,
                end: None,
            });
            self.requests[req as usize].started = Some(now);
            self.schedule(
                now + service,
                EventKind::ExecutionComplete,
                Payload::Execution {
                    instance: inst,
                    request: req,
                },
            );
        }
    }

    fn provision_complete(&mut self, id: InstanceId) {
        let now = self.clock;
        let inst = &mut self.instances[id as usize];
        if inst.retired_at.is_some() {
            return;
        }
        inst.phase = Phase::Ready;
        inst.idle_since = now;
        self.try_start(id);
    }

    fn stop_running(&mut self, inst: InstanceId, req: RequestId) {
        let now = self.clock;
        let i = &mut self.instances[inst as usize];
        i.running.retain(|&r| r != req);
        if let Some(span) = i.busy.iter_mut().rev().find(|b| b.request == req && b.end.is_none()) {
            span.end = Some(now);
        }
    }

    fn slot_freed(&mut self, inst: InstanceId) {
        let now = self.clock;
        {
            let i = &mut self.instances[inst as usize];
            if i.draining {
                if i.running.is_empty() {
                    i.retired_at = Some(now);
                }
                return;
            }
        }
        self.try_start(inst);
        let i = &mut self.instances[inst as usize];
        if i.running.is_empty() && i.queue.is_empty() {
            i.idle_since = now;
        }
    }

    fn execution_complete(&mut self, inst: InstanceId, req: RequestId) {
        let now = self.clock;
        let r = &mut self.requests[req as usize];
        if r.outcome != Outcome::Pending || !self.instances[inst as usize].running.contains(&req) {
            return;
        }
        r.outcome = Outcome::Success;
        r.completed = Some(now);
        r.resolved_at = Some(now);
        self.stop_running(inst, req);
        self.slot_freed(inst);
    }

    fn deadline(&mut self, req: RequestId) {
        let now = self.clock;
        if self.requests[req as usize].outcome != Outcome::Pending {
            return;
        }
        let mut outcome = Outcome::TimeoutFailure;
        match self.requests[req as usize].instance {
            Some(inst) if self.instances[inst as usize].running.contains(&req) => {
                self.stop_running(inst, req);
                self.slot_freed(inst);
            }
            Some(inst) => {
                self.instances[inst as usize].queue.retain(|&r| r != req);
            }
            None => {
                self.parked.retain(|&r| r != req);
                outcome = Outcome::RejectedFailure;
            }
        }
        let r = &mut self.requests[req as usize];
        r.outcome = outcome;
        r.resolved_at = Some(now);
    }

    /// Sets the number of live instances to `target`.
    ///
    /// Growth provisions fresh instances (one cold start each). Shrinking
    /// retires idle instances before busy ones, youngest first within each
    /// group; busy victims finish their running request and take no more work,
    /// and anything queued on a victim is re-routed.
    pub fn scale_to(&mut self, target: u32, at: SimTime) -> Result<ScalingReport> {
        if target < 1 || target > self.cfg.max_instances {
            return Err(Error::TargetOutOfRange {
                target: target as i64,
                max: self.cfg.max_instances,
            });
        }
        if at != self.clock {
            return Err(Error::Invariant(format!(
                "scale command at {at} while clock is {}",
                self.clock
            )));
        }
        let live = self.live_count();
        let mut report = ScalingReport::default();
        match target.cmp(&live) {
            Ordering::Greater => {
                for _ in live..target {
                    let id = self.instances.len() as InstanceId;
                    let ready_at = at + self.cfg.cold_start;
                    self.instances
                        .push(FunctionInstance::new(id, at, ready_at, Phase::Provisioning));
                    self.schedule(ready_at, EventKind::ProvisionComplete, Payload::Instance(id));
                    self.cold_starts += 1;
                    report.added += 1;
                    report.cold_starts_started += 1;
                }
                while let Some(req) = self.parked.pop_front() {
                    self.route(req);
                }
            }
            Ordering::Less => {
                let mut victims: Vec<&FunctionInstance> =
                    self.instances.iter().filter(|i| i.is_live()).collect();
                victims.sort_by_key(|i| (i.is_busy(), Reverse(i.created_at), Reverse(i.id)));
                let ids: Vec<InstanceId> = victims
                    .iter()
                    .take((live - target) as usize)
                    .map(|i| i.id)
                    .collect();
                report.removed = ids.len() as u32;
                self.retire_unchecked(&ids);
            }
            Ordering::Equal => {}
        }
        debug_assert!(self.live_count() >= 1 && self.live_count() <= self.cfg.max_instances);
        Ok(report)
    }

    /// Retires specific instances, refusing to drop below one live instance.
    /// Returns how many were actually retired.
    pub fn retire_instances(&mut self, ids: &[InstanceId]) -> u32 {
        let mut chosen = Vec::new();
        let mut live = self.live_count();
        for &id in ids {
            if live <= 1 {
                break;
            }
            if self.instances.get(id as usize).is_some_and(|i| i.is_live()) && !chosen.contains(&id) {
                chosen.push(id);
                live -= 1;
            }
        }
        self.retire_unchecked(&chosen);
        chosen.len() as u32
    }

    fn retire_unchecked(&mut self, ids: &[InstanceId]) {
        let now = self.clock;
        let mut orphans = Vec::new();
        for &id in ids {
            let inst = &mut self.instances[id as usize];
            orphans.extend(inst.queue.drain(..));
            if inst.running.is_empty() {
                inst.retired_at = Some(now);
            } else {
                inst.draining = true;
            }
        }
        for req in orphans {
            self.requests[req as usize].instance = None;
            self.route(req);
        }
    }

    /// Outcome counts over every request admitted so far.
    pub fn tally(&self) -> Tally {
        let mut t = Tally {
            arrivals: self.requests.len() as u64,
            ..Tally::default()
        };
        for r in &self.requests {
            match r.outcome {
                Outcome::Pending => t.pending += 1,
                Outcome::Success => t.successes += 1,
                _ => t.failures += 1,
            }
        }
        t
    }

    /// Lifetime ledgers of every instance, open spans closed at the clock.
    pub fn ledgers(&self) -> Vec<InstanceLedger> {
        let now = self.clock;
        self.instances
            .iter()
            .map(|i| InstanceLedger {
                id: i.id,
                created_at: i.created_at,
                cold: i.cold,
                ready: i.ready_span(now),
                busy: i
                    .busy
                    .iter()
                    .map(|b| Span::new(b.start, b.end.unwrap_or(now).max(b.start)))
                    .collect(),
                slots: self.cfg.concurrency,
            })
            .collect()
    }
}
