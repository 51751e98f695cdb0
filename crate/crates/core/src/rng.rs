//! Seeding and random-number generation.
//!
//! Every random stream in the crate is a `ChaCha12Rng`, a counter-based
//! generator whose output is identical on all platforms. Streams for
//! sub-tasks (one replicate at one grid point, say) are obtained by
//! splitting a base seed with SplitMix64: `derive_seed(base, &[i, j])`
//! folds each index into the state and finalizes, so distinct index paths
//! give unrelated seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and an index path.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &idx in path {
        state = splitmix64(state ^ splitmix64(idx.wrapping_add(GOLDEN)));
    }
    state
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
