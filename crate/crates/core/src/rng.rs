//! Seeded random streams.
//!
//! Every stream is ChaCha20 keyed by the little-endian bytes of a 64-bit
//! seed (remaining key bytes zero) with the 64-bit stream ID selecting an
//! independent keystream. Replication `r` of an experiment seeded with `s`
//! draws from stream `(s, r)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}
