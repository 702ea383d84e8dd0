//! Deterministic random streams.
//!
//! Every stream is ChaCha8 keyed by `seed` (expanded to 32 bytes with the
//! PCG32 routine of `rand_core::SeedableRng::seed_from_u64`) and selected by
//! a 64-bit stream id through ChaCha's stream counter. Work split across
//! workers draws from disjoint `(seed, stream_id)` pairs, so results do not
//! depend on how the work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform on `[0, 1)` with 53 bits of resolution.
#[inline]
pub fn uniform(rng: &mut StreamRng) -> f64 {
    rng.random::<f64>()
}
