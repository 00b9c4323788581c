use super::learn::{bellman_update, greedy_action, reward, select_action, Hyperparams};
use super::state::{DiscreteState, ScaleAction};
use super::table::QTable;
use crate::error::Result;
use crate::metrics::RunReport;
use crate::policies::{ScaleTarget, ScalingPolicy, WindowObservation};
use crate::rng::{self, SimRng};
use crate::runner::{run_timeframe, Environment};
use crate::workload::{arrivals_with, ArrivalSchedule, Trace};

fn observe(obs: &WindowObservation) -> DiscreteState {
    let (phi, tau) = obs.previous.as_ref().map_or((0.0, 0.0), |p| (p.phi, p.tau));
    // after the last window the index is one past the end; no action is ever
    // taken there, so its bootstrap value stays at the table default
    DiscreteState::observe(obs.n_hat, phi, tau, obs.index)
}

/// Epsilon-greedy learner that updates its table at every window boundary.
#[derive(Debug, Clone)]
pub struct QAgent {
    table: QTable,
    hyper: Hyperparams,
    max_instances: u32,
    epsilon: f64,
    rng: SimRng,
    last: Option<(DiscreteState, ScaleAction)>,
    episode_reward: f64,
}

impl QAgent {
    pub fn new(table: QTable, hyper: Hyperparams, max_instances: u32, seed: u64) -> Self {
        QAgent {
            table,
            hyper,
            max_instances,
            epsilon: 1.0,
            rng: rng::stream_rng(seed, rng::stream::AGENT, 0),
            last: None,
            episode_reward: 0.0,
        }
    }

    pub fn begin_episode(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
        self.last = None;
        self.episode_reward = 0.0;
    }

    pub fn episode_reward(&self) -> f64 {
        self.episode_reward
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn into_table(self) -> QTable {
        self.table
    }
}

impl ScalingPolicy for QAgent {
    fn label(&self) -> String {
        "rl".into()
    }

    fn on_window(&mut self, obs: &WindowObservation) -> Option<ScaleTarget> {
        let state = observe(obs);
        if let (Some((s, a)), Some(prev)) = (self.last.take(), obs.previous.as_ref()) {
            let r = reward(prev.phi, prev.tau, prev.n_hat, &self.hyper)
                .expect("window always ends with a live instance");
            self.episode_reward += r;
            bellman_update(&mut self.table, &s, a, r, &state, &self.hyper, self.max_instances);
        }
        if obs.is_final() {
            return None;
        }
        let a = select_action(&state, &self.table, self.epsilon, self.max_instances, &mut self.rng);
        self.last = Some((state, a));
        Some(ScaleTarget::clamped(a.apply(obs.n_hat) as i64, self.max_instances))
    }
}

/// Read-only policy that always takes the highest-valued action.
#[derive(Debug, Clone, Copy)]
pub struct GreedyAgent<'a> {
    table: &'a QTable,
    max_instances: u32,
}

impl<'a> GreedyAgent<'a> {
    pub fn new(table: &'a QTable, max_instances: u32) -> Self {
        GreedyAgent {
            table,
            max_instances,
        }
    }
}

impl ScalingPolicy for GreedyAgent<'_> {
    fn label(&self) -> String {
        "rl".into()
    }

    fn on_window(&mut self, obs: &WindowObservation) -> Option<ScaleTarget> {
        if obs.is_final() {
            return None;
        }
        let a = greedy_action(&observe(obs), self.table, self.max_instances);
        Some(ScaleTarget::clamped(a.apply(obs.n_hat) as i64, self.max_instances))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub epsilon: f64,
    pub total_reward: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub table: QTable,
    pub curve: Vec<EpochRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainOptions {
    /// Replay one arrival draw every epoch instead of re-drawing per epoch.
    pub fixed_arrivals: bool,
}

/// Runs `epochs` timeframes of epsilon-greedy Q-learning over `trace`.
pub fn train(
    env: &Environment,
    trace: &Trace,
    epochs: u64,
    hyper: &Hyperparams,
    seed: u64,
    opts: TrainOptions,
) -> Result<TrainingOutcome> {
    hyper.validate()?;
    env.check_trace(trace)?;
    let draw = |epoch: u64| -> ArrivalSchedule {
        let index = if opts.fixed_arrivals { 0 } else { epoch };
        arrivals_with(trace, &mut rng::stream_rng(seed, rng::stream::TRAIN_ARRIVALS, index))
    };
    let mut agent = QAgent::new(QTable::new(), hyper.clone(), env.max_instances(), seed);
    let mut curve = Vec::with_capacity(epochs as usize);
    for epoch in 0..epochs {
        let epsilon = super::epsilon_for_epoch(epoch, hyper);
        agent.begin_episode(epsilon);
        run_timeframe(env, &draw(epoch), &mut agent, seed)?;
        curve.push(EpochRecord {
            epoch,
            epsilon,
            total_reward: agent.episode_reward(),
        });
    }
    Ok(TrainingOutcome {
        table: agent.into_table(),
        curve,
    })
}

/// One timeframe with exploration off; the table is only read.
pub fn evaluate_greedy(
    table: &QTable,
    env: &Environment,
    schedule: &ArrivalSchedule,
    seed: u64,
) -> Result<RunReport> {
    let mut policy = GreedyAgent::new(table, env.max_instances());
    Ok(run_timeframe(env, schedule, &mut policy, seed)?.report)
}
