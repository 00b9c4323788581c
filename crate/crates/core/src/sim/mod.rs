//! Discrete-event model of a single function deployment: instance lifecycles,
//! least-loaded routing, FIFO execution with deadlines, and scaling commands on
//! a virtual clock.

mod engine;
mod time;
mod types;

pub use engine::{EventKind, InstanceLedger, Payload, SimEvent, Simulator};
pub use time::{SimTime, Span};
pub use types::{
    ClusterConfig, FunctionInstance, InstanceId, Outcome, Phase, Request, RequestId, Routing,
    ScalingReport, Tally,
};
