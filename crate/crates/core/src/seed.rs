//! Per-item random stream derivation.
//!
//! Every clip in a batch (and every point in a validation grid) gets its own
//! ChaCha8 stream seeded from a stable 64-bit hash of the run seed and the
//! item key. Results therefore depend only on `(seed, key)`, never on worker
//! count or scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type ClipRng = ChaCha8Rng;

/// First 8 bytes (little-endian) of `SHA-256(seed_le || key)`.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

pub fn stream_for(seed: u64, key: &str) -> ClipRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, key))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_key_sensitive() {
        assert_eq!(derive_seed(42, "clip_a"), derive_seed(42, "clip_a"));
        assert_ne!(derive_seed(42, "clip_a"), derive_seed(42, "clip_b"));
        assert_ne!(derive_seed(42, "clip_a"), derive_seed(43, "clip_a"));
        // reference value from an external SHA-256 implementation
        assert_eq!(derive_seed(42, "clip_a"), 13_148_095_140_564_111_818);
    }
}
