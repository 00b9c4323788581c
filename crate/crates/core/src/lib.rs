pub mod error;
pub mod harness;
pub mod metrics;
pub mod policies;
pub mod qlearn;
pub mod rng;
pub mod runner;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
