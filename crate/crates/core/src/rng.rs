//! Seeded random streams.
//!
//! Every random draw in a run descends from one 64-bit seed. Independent
//! consumers (measurement round, each scheme, each Monte Carlo trial) get
//! their own ChaCha stream so that adding draws in one place never shifts
//! the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream identifiers used by the harness.
pub mod streams {
    pub const MEASUREMENT: u64 = 1;
    pub const PROBABILISTIC_PINS: u64 = 2;
    pub const SCHEME_BASE: u64 = 16;
    pub const ANALYSIS: u64 = 64;
    pub const TRIAL_BASE: u64 = 1 << 32;
}

/// Generator for `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
