//! Tabular Q-learning for pre-provisioning function instances.
//!
//! State is `(instances, utilization bin, failure-rate bin, window)`; actions
//! add or remove instances within `[1, N]`. The reward compares observed
//! utilization and failure rate against their expected thresholds, divided by
//! the instance count.

mod agent;
mod learn;
mod state;
mod table;

pub use agent::{evaluate_greedy, train, EpochRecord, GreedyAgent, QAgent, TrainOptions, TrainingOutcome};
pub use learn::{
    bellman_update, epsilon_for_epoch, greedy_action, max_q, reward, select_action, Hyperparams,
    RewardUnits,
};
pub use state::{bin_percent, valid_actions, DiscreteState, ScaleAction, BINS};
pub use table::{QEntry, QTable, QTABLE_HEADER};
