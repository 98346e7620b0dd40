//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator whose
//! 256-bit key is the concatenation of a master seed and three stream
//! coordinates. Distinct coordinates give independent streams, and the
//! result never depends on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Stream purpose tags.
pub mod tag {
    pub const GRAPH: u64 = 0;
    pub const SIGNAL: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const QUANTIZE: u64 = 3;
}

/// Generator for the stream `(master, tag, a, b)`.
pub fn substream(master: u64, tag: u64, a: u64, b: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

/// Generator for a plain user seed.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha20Rng::seed_from_u64(seed)
}
