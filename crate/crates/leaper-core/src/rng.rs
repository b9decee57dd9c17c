//! Deterministic seed derivation.
//!
//! Every randomized routine in the crate takes an explicit `u64` seed and
//! derives per-task sub-seeds through [`derive_seed`], so results never depend
//! on call order, thread count, or global state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a base seed and a tag path.
///
/// Tag paths are unique per call site, which keeps the streams of nested
/// randomized components (forest -> tree -> bootstrap) disjoint.
pub(crate) fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag ^ 0xA076_1D64_78BD_642F));
    }
    state
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags for [`derive_seed`]. One constant per randomized subsystem.
pub(crate) mod stream {
    pub const DOE_ATTEMPT: u64 = 0x01;
    pub const DOE_COMPLEMENT: u64 = 0x0F;
    pub const TREE: u64 = 0x02;
    pub const BOOST_STAGE: u64 = 0x03;
    pub const FEATURE_PROBE: u64 = 0x04;
    pub const CV_SHUFFLE: u64 = 0x05;
    pub const FOREST_EVAL: u64 = 0x06;
    pub const BOOST_EVAL: u64 = 0x07;
    pub const TRANSFER_ITER: u64 = 0x08;
    pub const TRADABOOST: u64 = 0x09;
    pub const SURFACE: u64 = 0x0B;
    pub const NOISE: u64 = 0x0C;
    pub const RELATED: u64 = 0x0D;
    pub const PROFILE: u64 = 0x0E;
}
