//! Reproducible random streams.
//!
//! Every sampler in the crate draws from a [`RngState`], a `(seed, stream)`
//! pair mapped onto ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`
//! followed by `set_stream(stream)`). ChaCha is a counter-based cipher, so the
//! draw sequence is identical on every platform. Gaussian draws use
//! `rand_distr::StandardNormal`; both crate versions are pinned by the lockfile.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// The generator for this state. Two calls return identical sequences.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// State for the `index`-th independent unit of work (trial, probe).
    ///
    /// The child keeps `stream = index` and folds the parent's
    /// `(seed, stream)` into a fresh seed, so children of different
    /// parents never share a sequence and results do not depend on the
    /// order in which children are evaluated.
    pub fn child(&self, index: u64) -> RngState {
        RngState {
            seed: splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream: index,
        }
    }

    /// A labelled sub-experiment (e.g. "posterior draws" vs "reference draws").
    pub fn fork(&self, label: u64) -> RngState {
        RngState {
            seed: splitmix64(self.seed.wrapping_add(splitmix64(label ^ 0x9e37_79b9_7f4a_7c15)) ^ self.stream),
            stream: 0,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
