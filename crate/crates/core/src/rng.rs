//! Counter-based random streams.
//!
//! A stream is identified by `(seed, domain, index)`. The seed and domain are
//! mixed into a ChaCha key and the index selects the ChaCha stream, so item
//! `i` of a computation always sees the same numbers no matter which thread
//! evaluates it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated consumers of one master seed apart.
pub mod domain {
    pub const INIT: u64 = 0x01;
    pub const SHUFFLE: u64 = 0x02;
    pub const DROPOUT: u64 = 0x03;
    pub const REGION_SAMPLE: u64 = 0x10;
    pub const SUBSET: u64 = 0x11;
    pub const PAIRS: u64 = 0x12;
    pub const RATIO_SIM: u64 = 0x20;
    pub const ORTHOGONALITY: u64 = 0x21;
    pub const ANCHORS: u64 = 0x22;
    pub const SYNTHETIC: u64 = 0x30;
    pub const SPLIT: u64 = 0x31;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream number `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let key = mix64(seed ^ mix64(domain));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
