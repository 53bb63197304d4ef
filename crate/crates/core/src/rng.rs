//! Reproducible random streams.
//!
//! Every random decision in the crate draws from a [`StreamRng`] (ChaCha8)
//! seeded through [`derive_seed`]. A stream is identified by the master seed,
//! a fixed 64-bit tag naming the consumer (HEC seeds, random selection, a
//! synthetic learner, ...) and an ordinal inside that consumer. Streams never
//! share state, so parallel workers see the same numbers in any schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stream.
pub type StreamRng = ChaCha8Rng;

/// Stream tags for the built-in consumers.
pub mod tags {
    pub const HEC: u64 = 0x4845_435f_5345_4544; // "HEC_SEED"
    pub const RANDOM_SELECTION: u64 = 0x5241_4e44_5345_4c00;
    pub const SHAPLEY: u64 = 0x5348_4150_4c45_5900;
    pub const SYNTH_GOLD: u64 = 0x5359_4e5f_474f_4c44;
    pub const SYNTH_GROUP: u64 = 0x5359_4e5f_4752_5550;
    pub const SYNTH_LEARNER: u64 = 0x5359_4e5f_4c52_4e52;
}

/// SplitMix64 finalizer (Steele, Lea & Flood). Full avalanche on 64 bits.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `tag` for a given master seed.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let a = mix64(master.wrapping_add(GOLDEN));
    let b = mix64(a ^ tag.wrapping_mul(GOLDEN));
    mix64(b ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn stream(master: u64, tag: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tag, index))
}

/// 64-bit FNV-1a, used to turn names (learner ids, group names, method ids)
/// into stable stream indices.
pub fn name_hash(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
