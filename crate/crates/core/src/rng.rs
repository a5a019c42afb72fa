//! Seeded randomness. Every stochastic routine takes an explicit seed and
//! builds its own ChaCha stream, so runs replay bit-for-bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent child seed from a parent seed and a stream label.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finaliser over the combined value
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal(rng: &mut SeededRng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn unit(rng: &mut SeededRng) -> f64 {
    rng.random::<f64>()
}

pub fn shuffle<T>(rng: &mut SeededRng, items: &mut [T]) {
    items.shuffle(rng);
}
