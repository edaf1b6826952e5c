//! Counter-based seeding. Every random decision is keyed by `(seed, stream, index)`
//! so results never depend on iteration order or thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn hash2(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(23))
}

#[inline]
pub fn hash3(a: u64, b: u64, c: u64) -> u64 {
    mix64(hash2(a, b) ^ c.rotate_left(41))
}

/// Uniform in [0, 1) with 53 bits of precision.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derive an independent child seed for a named purpose.
pub fn derive(seed: u64, tag: &str) -> u64 {
    tag.bytes()
        .fold(mix64(seed ^ 0x5EED), |h, byte| hash2(h, byte as u64))
}

/// A full-quality generator for stream `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
