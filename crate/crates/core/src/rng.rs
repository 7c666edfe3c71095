//! Seeded substreams.
//!
//! Every random quantity in a run is drawn from a ChaCha stream whose seed is
//! derived from the run seed plus a tag path, so channel draws, symbol draws
//! and noise draws never share state and any one of them can be regenerated
//! in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a tag path.
pub fn substream(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream(seed, tags))
}

pub(crate) mod tag {
    pub const CHANNEL: u64 = 0xC4A1;
    pub const NOISE: u64 = 0x9015E;
    pub const SYMBOLS: u64 = 0x5E3B;
    pub const TRIAL: u64 = 0x7121A1;
}
