//! Named random streams derived from one master seed.
//!
//! Every consumer of randomness (gossip scheduling, injected Langevin noise,
//! initial states, data generation, partitioning, projections) draws from its
//! own ChaCha8 stream. A stream is `ChaCha8Rng::seed_from_u64(master)` with
//! the 64-bit stream id set to `(chain << 8) | purpose`, so changing how much
//! one consumer draws never shifts the values seen by another, and chains
//! never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Stream {
    Schedule = 1,
    Noise = 2,
    Init = 3,
    Data = 4,
    Partition = 5,
    Split = 6,
    Projection = 7,
    Reference = 8,
}

/// Open stream `purpose` of chain `chain` under `master`.
pub fn stream(master: u64, purpose: Stream, chain: u32) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((chain as u64) << 8) | purpose as u64);
    rng
}
