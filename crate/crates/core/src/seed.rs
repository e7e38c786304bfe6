//! Seed derivation so that every stochastic step gets its own stream from a
//! single master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with a path of integer labels (splitmix64 finaliser).
pub fn derive(base: u64, labels: &[u64]) -> u64 {
    let mut state = base ^ 0x9E37_79B9_7F4A_7C15;
    for &label in labels {
        state = mix(state.wrapping_add(label.wrapping_mul(0xBF58_476D_1CE4_E5B9)));
    }
    mix(state)
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(base: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, labels))
}
