//! Deterministic, splittable random streams.
//!
//! Every replication draws from its own ChaCha stream keyed by (master seed,
//! replication index, stream tag), so replications are independent of
//! scheduling order and any single replication can be replayed exactly from
//! the report's seed triple.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Finalizing 64-bit mixer (splitmix64 style): avalanches all input bits.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a (master seed, replication, purpose) triple.
///
/// Used by the replication harness so that each replication's generator
/// seed is recorded in the report and the replication can be replayed in
/// isolation.
pub fn derive(master_seed: u64, replication: u64, tag: u64) -> u64 {
    let a = mix(master_seed);
    let b = mix(a ^ mix(replication.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    mix(b ^ mix(tag.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Independent generator for one (seed, replication, stream) triple.
pub fn stream(master_seed: u64, replication: u64, tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        mix(master_seed),
        mix(master_seed ^ mix(replication)),
        mix(replication ^ mix(tag)),
        mix(tag ^ mix(master_seed).rotate_left(17)),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
