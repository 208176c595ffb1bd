//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit master seed. Independent streams are split off by a counter: the
//! generator for `(seed, stream)` is `ChaCha8Rng::seed_from_u64(seed)` with its
//! stream id set to `stream`. Trial `k` of a batch uses stream `k`; restart `j`
//! of a search uses stream `j`. Streams never share state, so results do not
//! depend on how work is spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed, used when a stream itself needs sub-streams.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = seed ^ stream.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
