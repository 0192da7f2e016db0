//! Seeded, splittable random streams.
//!
//! Replicas draw from independent ChaCha streams of a common seed, so an
//! ensemble is reproducible regardless of how replicas are scheduled across
//! worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Stream for replica `replica` of the experiment seeded by `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Mix auxiliary run labels (lattice size, parameter index, ...) into a
/// seed, so distinct runs of one experiment use unrelated streams.
/// SplitMix64 finalizer.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    let mut z = seed;
    for &l in labels {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(l);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Uniform draw in `(0, 1]`, safe to feed into a logarithm.
#[inline]
pub fn uniform_pos<F: Scalar>(rng: &mut ChaCha8Rng) -> F {
    let u: f64 = rng.random();
    F::of(1.0 - u)
}

/// Exponential waiting time with the given rate.
#[inline]
pub fn exponential<F: Scalar>(rng: &mut ChaCha8Rng, rate: F) -> F {
    -uniform_pos::<F>(rng).ln() / rate
}
