//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 keystream. The key is derived from the run seed
//! and the stream word (the ChaCha nonce) from a textual label:
//!
//! ```text
//! key    = splitmix64 expansion of `seed`   (rand_chacha `seed_from_u64`)
//! stream = fnv1a64(label)
//! ```
//!
//! Distinct labels under the same seed select disjoint keystreams, so the
//! image-side and text-side mask pools of the cross-modal sampler are drawn
//! from independent sub-streams by construction. ChaCha is counter based and
//! platform independent, so batches are bit-identical across machines.
//!
//! Derived integer seeds (for handing a sub-seed to another component) use
//! [`derive_seed`], a splitmix64 finalizer over `seed ^ fnv1a64(label)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub const LABEL_NAIVE: &str = "naive";
pub const LABEL_IMAGE: &str = "image";
pub const LABEL_TEXT: &str = "text";

/// Keystream for `(seed, label)`.
pub fn stream(seed: u64, label: &str) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a64(label.as_bytes()));
    rng
}

/// Labeled sub-seed of `seed`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    mix64(seed ^ fnv1a64(label.as_bytes()))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
