//! Seeded random streams.
//!
//! Each consumer draws from its own ChaCha stream keyed by the run seed, so
//! changing how many draws one consumer makes never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology = 1,
    Arrivals = 2,
    Protocol = 3,
    Batches = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
