//! Seeded, purpose-keyed random streams.
//!
//! One root seed fans out into independent counter-based sub-streams, so the
//! randomness used for topology setup never interleaves with event sampling.
//! Two runs with the same seed draw identical streams regardless of how many
//! values other purposes consumed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named sub-stream purposes. The discriminant selects the ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    /// Straggler placement and other topology randomness.
    Topology = 1,
    /// Global event clock and edge selection (P.p.p. superposition).
    Events = 2,
    /// Per-node clocks in the loss-network model.
    NodeClocks = 3,
    /// Neighbor selection after a node tick.
    NeighborChoice = 4,
    /// Independent Monte-Carlo trials (queue probe).
    Trials = 5,
}

/// A seedable stream for the given purpose, independent of all other purposes.
pub fn stream(seed: u64, id: StreamId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

/// A trial-indexed stream: independent across both trials and purposes.
pub fn trial_stream(seed: u64, id: StreamId, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((id as u64) << 32 | trial);
    rng
}
