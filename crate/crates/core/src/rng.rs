//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed, with the
//! 64-bit ChaCha stream selector set to the stream id. Child streams are
//! derived by mixing the parent id and a label through SplitMix64, which is
//! a bijection on `u64`, so distinct labels under one parent always give
//! distinct stream ids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator handed to every RNG-consuming routine.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id: 0,
        }
    }

    /// Child stream for `label`.
    pub fn derive(&self, label: u64) -> SeedSpec {
        derive_stream(*self, label)
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_stream(master: SeedSpec, label: u64) -> SeedSpec {
    SeedSpec {
        master_seed: master.master_seed,
        stream_id: splitmix64(splitmix64(master.stream_id) ^ label),
    }
}
