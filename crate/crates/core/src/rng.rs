//! Seed-derived random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by
//! `(seed, purpose)` and positioned on a stream `index`. Sample `i` of an
//! estimator always uses stream `i`, so results do not depend on how work
//! is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes keep independent uses of one seed apart.
pub mod purpose {
    pub const EM_RESTART: u64 = 1;
    pub const ESTIMATE: u64 = 2;
    pub const CROSS_ENTROPY: u64 = 3;
    pub const PRESET: u64 = 4;
    pub const GENERATE: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
    pub const COMPARE: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key derived from a user seed and a purpose tag.
pub fn derive(seed: u64, purpose: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ purpose.wrapping_mul(0xd605_bbb5_8c8a_bb3d))
}

/// Generator for stream `index` under `(seed, purpose)`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, purpose));
    rng.set_stream(index);
    rng
}
