//! Seeded PRNG plumbing.
//!
//! Everything random in this crate flows through PCG generators seeded from a
//! single `u64`. Independent streams (weight init, batch sampling, simulator
//! noise, planner sampling, per-episode work) are derived by mixing the base
//! seed with a stream tag, so concurrent consumers never share a generator.

pub use rand_pcg::Pcg64Mcg;

use rand::SeedableRng;

/// Stream tags for deriving independent generators from one base seed.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    WeightInit,
    BatchSampling,
    PretrainActions,
    SensorNoise,
    Planner,
    Episode(u64),
    /// Planner invocation at a given (episode, step).
    PlanStep(u64, u64),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::WeightInit => 0x57_49,
            Stream::BatchSampling => 0x42_53,
            Stream::PretrainActions => 0x50_41,
            Stream::SensorNoise => 0x4e_4f,
            Stream::Planner => 0x50_4c,
            Stream::Episode(e) => 0x45_50_0000 ^ mix(e),
            Stream::PlanStep(e, s) => 0x53_54_0000 ^ mix(mix(e) ^ s),
        }
    }
}

/// SplitMix64 finalizer; a cheap, well-distributed 64-bit mixer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed for `stream` from `seed`.
pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    mix(seed ^ mix(stream.tag()))
}

/// Generator for `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(derive_seed(seed, stream))
}

/// Generator seeded directly from `seed`.
pub fn rng(seed: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(seed)
}
