//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `seed` (expanded with
//! `SeedableRng::seed_from_u64`, which is portable) and positioned on stream
//! `index`. The same `(seed, index)` yields the same sequence on every
//! platform, and distinct indices never overlap.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent 64-bit seed from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    stream(seed, index | (1 << 63)).next_u64()
}
