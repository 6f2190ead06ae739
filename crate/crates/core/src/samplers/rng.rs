//! Seeded generators. Every chain owns one ChaCha20 stream: the configured
//! seed selects the key and the chain index selects the stream.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type ChainRng = ChaCha20Rng;

/// Recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha20Rng";

pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
