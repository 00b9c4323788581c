/// Number of utilization / failure-rate bins (10 percentage points each, with
/// 100 in a bin of its own).
pub const BINS: u8 = 11;

/// Maps a percentage onto `0..=10`.
pub fn bin_percent(p: f64) -> u8 {
    if !p.is_finite() || p <= 0.0 {
        return 0;
    }
    ((p / 10.0).floor() as i64).clamp(0, (BINS - 1) as i64) as u8
}

/// Observed environment state at a window boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscreteState {
    pub n_hat: u32,
    pub phi_bin: u8,
    pub tau_bin: u8,
    pub window: u32,
}

impl DiscreteState {
    pub fn observe(n_hat: u32, phi: f64, tau: f64, window: u32) -> Self {
        DiscreteState {
            n_hat,
            phi_bin: bin_percent(phi),
            tau_bin: bin_percent(tau),
            window,
        }
    }

    pub fn state_count(max_instances: u32, windows: u32) -> usize {
        max_instances as usize * BINS as usize * BINS as usize * windows as usize
    }
}

/// Change in instance count applied at a window boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScaleAction(pub i32);

impl ScaleAction {
    pub fn delta(self) -> i32 {
        self.0
    }

    pub fn apply(self, n_hat: u32) -> u32 {
        (n_hat as i64 + self.0 as i64) as u32
    }

    pub fn is_valid(self, s: &DiscreteState, max_instances: u32) -> bool {
        let next = s.n_hat as i64 + self.0 as i64;
        next >= 1 && next <= max_instances as i64
    }
}

/// Deltas keeping the instance count in `[1, max]`, ascending.
pub fn valid_actions(s: &DiscreteState, max_instances: u32) -> Vec<ScaleAction> {
    let lo = 1 - s.n_hat as i32;
    let hi = max_instances as i32 - s.n_hat as i32;
    (lo..=hi).map(ScaleAction).collect()
}
