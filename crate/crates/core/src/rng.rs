//! Seeded random streams.
//!
//! Every stochastic step draws from ChaCha8 seeded with a 64-bit value.
//! Parallel work items never share a generator: item `i` of a task seeded
//! with `master` gets its own stream seeded with [`child_seed`]`(master, i)`,
//! so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from `master`.
///
/// `splitmix64(splitmix64(master) ^ splitmix64(index + 1))`; the `+ 1` keeps
/// index 0 from collapsing onto the master stream.
pub fn child_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(master: u64, index: u64) -> Rng {
    rng_from_seed(child_seed(master, index))
}
