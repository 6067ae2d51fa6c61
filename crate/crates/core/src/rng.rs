//! Counter-based stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit seed, with the ChaCha stream id selecting the purpose. Replication
//! seeds are a pure function of `(master, replication)`, so the draws of one
//! replication never depend on which thread ran it or on how many ran before.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Errors,
    Regressors,
    /// Error stream of the `k`-th component of a vector process.
    ComponentErrors(u32),
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::Errors => 0,
            Purpose::Regressors => 1,
            Purpose::ComponentErrors(k) => 16 + u64::from(k),
        }
    }
}

pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.stream_id());
    rng
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replication `rep` of a run with the given master seed.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    mix64(mix64(master).wrapping_add(rep.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}
