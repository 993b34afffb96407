//! Master-seed substreams.
//!
//! Every chain, restart and simulated dataset draws from its own ChaCha
//! stream keyed by `(master seed, stream id)`, so results do not depend on
//! execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

pub fn substream(master: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// A child seed for a nested unit (dataset, fit), drawn from a substream.
pub fn derive(master: u64, stream: u64) -> u64 {
    use rand::Rng;
    substream(master, stream).random()
}

/// Stream id for the `index`-th unit of a given role (chain, dataset, ...).
pub fn stream_id(role: u32, index: u64) -> u64 {
    (u64::from(role) << 48) | (index & 0xFFFF_FFFF_FFFF)
}

pub mod roles {
    pub const KMEANS: u32 = 1;
    pub const CHAIN: u32 = 2;
    pub const EM_RESTART: u32 = 3;
    pub const DATASET: u32 = 4;
    pub const FIT: u32 = 5;
}
