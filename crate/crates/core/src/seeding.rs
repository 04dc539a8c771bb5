//! Deterministic random streams derived from one session seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GROUND_TRUTH: u64 = 1;
pub const EVAL_GRID: u64 = 2;
pub const RECOMMENDATION: u64 = 3;
pub const HOLDOUT: u64 = 4;
pub const VALIDATION: u64 = 5;
pub const PRESENTATION: u64 = 6;
const ROUND_BASE: u64 = 1 << 32;

/// Independent ChaCha8 stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Candidate stream for learning round `round` (1-based).
pub fn round_stream(seed: u64, round: usize) -> ChaCha8Rng {
    stream(seed, ROUND_BASE + round as u64)
}
