//! Deterministic random streams and seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream owned by one simulation.
pub type RandomStream = ChaCha8Rng;

/// Builds a stream from a 64-bit seed.
pub fn stream(seed: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One round of the splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a hash, stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01B3);
    }
    h
}

/// Seed of replication `run` of algorithm `algorithm` under base seed `base`.
pub fn derive_seed(base: u64, run: u64, algorithm: &str) -> u64 {
    let mut z = splitmix64(base);
    z = splitmix64(z ^ run);
    splitmix64(z ^ fnv1a(algorithm.as_bytes()))
}
