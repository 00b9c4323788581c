use rand::Rng;

use super::state::{valid_actions, DiscreteState, ScaleAction};
use super::table::QTable;
use crate::error::{Error, Result};

/// Whether reward terms are percentage points or fractions of one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RewardUnits {
    Percent,
    Fraction,
}

impl std::str::FromStr for RewardUnits {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "percent" => Ok(RewardUnits::Percent),
            "fraction" => Ok(RewardUnits::Fraction),
            other => Err(Error::Config(format!("unknown reward units {other:?}"))),
        }
    }
}

impl std::fmt::Display for RewardUnits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RewardUnits::Percent => "percent",
            RewardUnits::Fraction => "fraction",
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Hyperparams {
    /// Learning rate.
    pub alpha: f64,
    /// Discount factor.
    pub gamma: f64,
    pub decay_rate: f64,
    pub epsilon_floor: f64,
    pub epsilon_span: f64,
    /// Expected average utilization, percent.
    pub phi_target: f64,
    /// Expected failure rate, percent.
    pub tau_target: f64,
    pub units: RewardUnits,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.9,
            gamma: 0.99,
            decay_rate: 0.0025,
            epsilon_floor: 0.01,
            epsilon_span: 0.99,
            phi_target: 75.0,
            tau_target: 20.0,
            units: RewardUnits::Percent,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("gamma must be in [0, 1]".into()));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate.is_finite()) {
            return Err(Error::Config("decay-rate must be positive".into()));
        }
        if self.epsilon_floor < 0.0 || self.epsilon_span < 0.0 || self.epsilon_floor + self.epsilon_span > 1.0 + 1e-12 {
            return Err(Error::Config("epsilon-floor + epsilon-span must stay within [0, 1]".into()));
        }
        for (name, v) in [("phi-target", self.phi_target), ("tau-target", self.tau_target)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be a percentage")));
            }
        }
        Ok(())
    }
}

/// Exploration rate for a 0-based training epoch: `floor + span * exp(-decay * epoch)`.
pub fn epsilon_for_epoch(epoch: u64, h: &Hyperparams) -> f64 {
    h.epsilon_floor + h.epsilon_span * (-h.decay_rate * epoch as f64).exp()
}

/// Delayed reward for a window: the gap between expected and observed
/// utilization plus the gap between expected and observed failure rate,
/// shared across the instances that were running.
pub fn reward(phi: f64, tau: f64, n_hat: u32, h: &Hyperparams) -> Result<f64> {
    if n_hat < 1 {
        return Err(Error::RewardDomain(n_hat));
    }
    let scale = match h.units {
        RewardUnits::Percent => 1.0,
        RewardUnits::Fraction => 0.01,
    };
    let numerator = (h.phi_target - phi) + (h.tau_target - tau);
    Ok(scale * numerator / n_hat as f64)
}

/// Highest-valued valid action; ties prefer the smallest change, then a
/// decrease over an increase.
pub fn greedy_action(s: &DiscreteState, q: &QTable, max_instances: u32) -> ScaleAction {
    valid_actions(s, max_instances)
        .into_iter()
        .map(|a| (q.get(s, a), a))
        .max_by(|(qa, a), (qb, b)| {
            qa.total_cmp(qb)
                .then_with(|| b.0.abs().cmp(&a.0.abs()))
                .then_with(|| b.0.cmp(&a.0))
        })
        .map(|(_, a)| a)
        .expect("at least one valid action")
}

pub fn max_q(s: &DiscreteState, q: &QTable, max_instances: u32) -> f64 {
    valid_actions(s, max_instances)
        .into_iter()
        .map(|a| q.get(s, a))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Epsilon-greedy choice among the valid actions of `s`.
pub fn select_action<R: Rng + ?Sized>(
    s: &DiscreteState,
    q: &QTable,
    eps: f64,
    max_instances: u32,
    rng: &mut R,
) -> ScaleAction {
    if rng.gen::<f64>() < eps {
        let actions = valid_actions(s, max_instances);
        actions[rng.gen_range(0..actions.len())]
    } else {
        greedy_action(s, q, max_instances)
    }
}

/// `Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s', a'))`.
/// Returns the new value.
pub fn bellman_update(
    q: &mut QTable,
    s: &DiscreteState,
    a: ScaleAction,
    r: f64,
    s_next: &DiscreteState,
    h: &Hyperparams,
    max_instances: u32,
) -> f64 {
    debug_assert!(a.is_valid(s, max_instances), "update on invalid pair {s:?} {a:?}");
    let target = r + h.gamma * max_q(s_next, q, max_instances);
    let e = q.entry_mut(*s, a);
    e.value = (1.0 - h.alpha) * e.value + h.alpha * target;
    e.visits += 1;
    e.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn h() -> Hyperparams {
        Hyperparams::default()
    }

    fn st(n: u32) -> DiscreteState {
        DiscreteState::observe(n, 0.0, 0.0, 0)
    }

    #[test]
    fn epsilon_schedule() {
        assert_eq!(epsilon_for_epoch(0, &h()), 1.0);
        let e500 = epsilon_for_epoch(500, &h());
        assert!((e500 - (0.01 + 0.99 * (-1.25f64).exp())).abs() < 1e-12);
        assert!((e500 - 0.2937).abs() < 1e-4);
        assert!((epsilon_for_epoch(1_000_000, &h()) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn reward_examples() {
        for n in 1..=7 {
            assert_eq!(reward(75.0, 20.0, n, &h()).unwrap(), 0.0);
        }
        assert_eq!(reward(50.0, 10.0, 5, &h()).unwrap(), 7.0);
        assert_eq!(reward(100.0, 100.0, 1, &h()).unwrap(), -105.0);
        assert!(matches!(reward(0.0, 0.0, 0, &h()), Err(Error::RewardDomain(0))));
        let frac = Hyperparams {
            units: RewardUnits::Fraction,
            ..h()
        };
        assert!((reward(50.0, 10.0, 5, &frac).unwrap() - 0.07).abs() < 1e-12);
    }

    #[test]
    fn bellman_examples() {
        let mut q = QTable::new();
        let v = bellman_update(&mut q, &st(1), ScaleAction(0), 7.0, &st(1), &h(), 7);
        assert!((v - 6.3).abs() < 1e-12);
        assert_eq!(q.visits(&st(1), ScaleAction(0)), 1);

        let frozen = Hyperparams { alpha: 0.0, ..h() };
        let mut q = QTable::new();
        q.entry_mut(st(2), ScaleAction(1)).value = 3.0;
        assert_eq!(bellman_update(&mut q, &st(2), ScaleAction(1), 50.0, &st(3), &frozen, 7), 3.0);

        let mut q = QTable::new();
        q.entry_mut(st(2), ScaleAction(0)).value = 10.0;
        q.entry_mut(st(3), ScaleAction(-1)).value = 10.0;
        let v = bellman_update(&mut q, &st(2), ScaleAction(0), 0.0, &st(3), &h(), 7);
        assert!((v - 9.91).abs() < 1e-12);
    }

    #[test]
    fn greedy_and_tie_breaks() {
        let mut q = QTable::new();
        let s = st(4);
        let mut rng = stream_rng(1, 0, 0);
        assert_eq!(select_action(&s, &q, 0.0, 7, &mut rng), ScaleAction(0));
        q.entry_mut(s, ScaleAction(1)).value = 5.0;
        assert_eq!(select_action(&s, &q, 0.0, 7, &mut rng), ScaleAction(1));
        // equal magnitude: decrease first
        let mut q = QTable::new();
        q.entry_mut(s, ScaleAction(0)).value = -1.0;
        assert_eq!(greedy_action(&s, &q, 7), ScaleAction(-1));
        // negative values everywhere make unvisited pairs win
        q.entry_mut(s, ScaleAction(-1)).value = -1.0;
        q.entry_mut(s, ScaleAction(1)).value = -1.0;
        assert_eq!(greedy_action(&s, &q, 7), ScaleAction(-2));
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = QTable::new();
        let s = st(4);
        let mut rng = stream_rng(3, 0, 0);
        let mut counts = [0u32; 7];
        for _ in 0..7000 {
            let a = select_action(&s, &q, 1.0, 7, &mut rng);
            counts[(a.0 + 3) as usize] += 1;
        }
        // each bucket expects 1000; 5 sigma ~ 150
        assert!(counts.iter().all(|&c| (850..=1150).contains(&c)), "{counts:?}");
    }

    proptest! {
        #[test]
        fn epsilon_strictly_decreasing(e in 0u64..10_000) {
            let a = epsilon_for_epoch(e, &h());
            let b = epsilon_for_epoch(e + 1, &h());
            prop_assert!(b < a);
            prop_assert!(a <= 1.0 && b > 0.01);
        }

        #[test]
        fn greedy_is_pure(n in 1u32..=7, vals in prop::collection::vec(-50.0f64..50.0, 7)) {
            let s = st(n);
            let mut q = QTable::new();
            for (a, v) in valid_actions(&s, 7).into_iter().zip(vals) {
                q.entry_mut(s, a).value = v;
            }
            let mut r1 = stream_rng(1, 0, 0);
            let mut r2 = stream_rng(999, 5, 5);
            prop_assert_eq!(select_action(&s, &q, 0.0, 7, &mut r1), select_action(&s, &q, 0.0, 7, &mut r2));
        }

        #[test]
        fn q_values_stay_bounded(
            steps in prop::collection::vec((0.0f64..=100.0, 0.0f64..=100.0, 0u32..5), 1..300)
        ) {
            // |r| <= 185 with divisor >= 1
            let bound = 185.0 / (1.0 - h().gamma) + 1e-6;
            let mut q = QTable::new();
            let mut rng = stream_rng(5, 0, 0);
            let mut s = st(1);
            for (phi, tau, w) in steps {
                let a = select_action(&s, &q, 0.5, 7, &mut rng);
                let n = a.apply(s.n_hat);
                let r = reward(phi, tau, n, &h()).unwrap();
                let s_next = DiscreteState::observe(n, phi, tau, w);
                let v = bellman_update(&mut q, &s, a, r, &s_next, &h(), 7);
                prop_assert!(v.is_finite() && v.abs() <= bound);
                s = s_next;
            }
            for ((s, a), e) in q.iter() {
                prop_assert!(a.is_valid(s, 7));
                prop_assert!(e.visits > 0);
            }
        }
    }
}
