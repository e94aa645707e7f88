//! Seeded random streams.
//!
//! All randomness in the crate flows through ChaCha8 streams so that a
//! `(seed, stream)` pair reproduces the same bits on every platform. Trials
//! in an ensemble each get their own stream number, which makes parallel and
//! sequential sampling produce identical counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Generator for `seed` on stream 0.
pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive a child seed from a parent seed and a label, for sweeps that need
/// many unrelated instances.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    use rand::Rng;
    let mut rng = substream(seed, index.wrapping_add(1 << 32));
    rng.random()
}
