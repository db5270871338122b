//! Reproducible random substreams.
//!
//! A stream is named by `(master seed, stream index)`. The master seed is
//! passed through the SplitMix64 finalizer (constants `0x9E3779B97F4A7C15`,
//! `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`) to key a ChaCha8 generator, and
//! the stream index selects the ChaCha nonce. ChaCha is counter based, so
//! distinct indices give independent, individually reproducible sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStreamSpec {
    pub seed: u64,
    pub stream: u64,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStreamSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStreamSpec { seed, stream }
    }

    pub fn rng(&self) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}
