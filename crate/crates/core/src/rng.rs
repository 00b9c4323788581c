//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from a
//! master seed, so adding draws in one place never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids for the independent consumers of a master seed.
pub mod stream {
    pub const TRAIN_ARRIVALS: u64 = 1;
    pub const AGENT: u64 = 2;
    pub const EVAL_ARRIVALS: u64 = 3;
}

/// Deterministic generator for `(seed, stream, index)`.
pub fn stream_rng(seed: u64, stream: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng
}

/// Folds a sub-index into a seed; used where an API takes a plain `u64` seed.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream_rng(seed, stream, index).next_u64()
}
