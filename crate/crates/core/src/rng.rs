//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit `&mut impl Rng`. Callers
//! derive one stream per scenario, run, or trial from a base seed so that
//! results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for item `index` of a batch started at `base`.
pub fn derived(base: u64, index: u64) -> SimRng {
    seeded(base.wrapping_add(index))
}

/// Splitmix64 finalizer over `seed ^ salt`; used to fork independent
/// sub-streams (per revolution, per sample) out of one run seed.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
