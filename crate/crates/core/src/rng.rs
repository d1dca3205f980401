//! Deterministic random-number streams.
//!
//! Every randomized computation in the crate takes a `u64` seed and derives
//! independent ChaCha streams from it.  Work that is split across threads is
//! assigned streams by logical index (chunk number, matrix row, retry
//! counter), never by thread identity, so results are reproducible for a
//! given seed regardless of worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A ChaCha generator for logical stream `stream` of the master seed.
///
/// Streams with the same seed but different stream indices are statistically
/// independent; the mapping is stable across platforms and thread counts.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Reserved stream indices, so unrelated consumers of one seed never collide.
pub mod streams {
    /// Channel matrix draws.
    pub const CHANNEL: u64 = 0x0100_0000;
    /// Combiner draws for general-position constructions (plus retry index).
    pub const COMBINER: u64 = 0x0200_0000;
    /// Threshold draws for general-position constructions (plus retry index).
    pub const THRESHOLD: u64 = 0x0300_0000;
    /// Region sampling (plus chunk index).
    pub const REGION_SAMPLE: u64 = 0x0400_0000;
    /// Monte Carlo transition estimation (plus row index).
    pub const TRANSITION: u64 = 0x0500_0000;
    /// Link simulation: message draws (plus chunk index).
    pub const MESSAGE: u64 = 0x0600_0000;
    /// Link simulation: noise draws (plus chunk index).
    pub const NOISE: u64 = 0x0700_0000;
}
