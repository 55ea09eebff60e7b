//! Keyed random streams.
//!
//! Every stochastic quantity in the crate is drawn from a stream identified by
//! a master seed and a path of integer labels (replicate index, node key,
//! covariate, cutoff, ...). Streams are ChaCha8 instances, a counter-based
//! generator, so the draws made inside one stream never depend on how many
//! other streams exist or in which order workers touch them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a path of labels into a single 64-bit key.
pub fn key(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(seed ^ 0x5851_F42D_4C95_7F2D), |acc, &label| {
            mix64(acc ^ mix64(label.wrapping_add(0x1405_7B7E_F767_814F)))
        })
}

/// The stream for `path` under `seed`.
pub fn stream(seed: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(key(seed, path))
}

/// Sub-stream `index` of the stream identified by `key`; uses the ChaCha
/// stream id so that sibling sub-streams share a key schedule.
pub fn substream(key: u64, index: u64) -> Stream {
    let mut rng = Stream::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Stable 64-bit label for a string (FNV-1a).
pub fn label(name: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in name.as_bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
