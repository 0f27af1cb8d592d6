//! Deterministic seed derivation.
//!
//! Every random stream in the crate is keyed by a root seed plus a list of
//! byte labels, hashed with SHA-256, so streams never depend on call order,
//! thread scheduling or the standard library's hasher.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream_seed(root: u64, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// Named child seed, e.g. `substream(root, "oracle")`.
pub fn substream(root: u64, label: &str) -> u64 {
    stream_seed(root, &[label.as_bytes()])
}

pub fn rng_for(root: u64, parts: &[&[u8]]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(root, parts))
}
