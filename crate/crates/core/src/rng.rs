//! Deterministic RNG streams keyed by (seed, purpose, index).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Placement = 1,
    Traffic = 2,
    Fading = 3,
    Rounds = 4,
    Learner = 5,
    Sweep = 6,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) ^ index);
    rng
}

/// Seed of the `round`-th derived realization. Round 0 is the seed itself.
pub fn derive_seed(seed: u64, round: u64) -> u64 {
    if round == 0 {
        seed
    } else {
        stream(seed, Purpose::Rounds, round).next_u64()
    }
}
