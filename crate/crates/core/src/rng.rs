//! Deterministic random streams.
//!
//! Every stochastic operation takes an explicit [`RngStream`], a
//! `(seed, stream_index)` pair that maps onto an independent ChaCha8
//! keystream. Per-projection work derives `(seed, base + l)` via
//! [`RngStream::offset`], so results do not depend on how work is split
//! across threads. Hierarchical consumers (flow steps, subsampling, probe
//! evaluations) use [`RngStream::child`], which hashes a tag into a fresh
//! stream index far from any contiguous offset range.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Materialises the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// The stream `(seed, stream_index + l)`.
    pub fn offset(&self, l: u64) -> Self {
        Self {
            seed: self.seed,
            stream_index: self.stream_index.wrapping_add(l),
        }
    }

    /// A stream whose index is a hash of this index and `tag`.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream_index: splitmix64(self.stream_index ^ splitmix64(tag.wrapping_add(0x5851_f42d))),
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
