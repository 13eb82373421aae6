//! Splittable, counter-based random streams.
//!
//! Every random draw in a simulation is addressed by a tuple
//! `(master seed, purpose, trial, a, b)`, where `a`/`b` are purpose-specific
//! indices such as (cell, user). The tuple is hashed into a ChaCha8 key and
//! stream id, so draws never depend on the order in which trials or users are
//! processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Channel,
    Basis,
    Codebook,
    Probe,
    Noise,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Channel => 0x4348_414e,
            Purpose::Basis => 0x4241_5349,
            Purpose::Codebook => 0x434f_4442,
            Purpose::Probe => 0x5052_4f42,
            Purpose::Noise => 0x4e4f_4953,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one addressed stream.
pub fn stream(seed: u64, purpose: Purpose, trial: u64, a: u64, b: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ purpose.tag()) ^ trial);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(splitmix(a).rotate_left(17) ^ b);
    rng
}

/// The streams belonging to one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStreams {
    pub seed: u64,
    pub trial: u64,
}

impl TrialStreams {
    pub fn new(seed: u64, trial: u64) -> Self {
        TrialStreams { seed, trial }
    }

    pub fn get(&self, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
        stream(self.seed, purpose, self.trial, a, b)
    }
}
