//! Seed plumbing. Every random stream in the crate is a `ChaCha8Rng` whose
//! seed is derived from a base seed and a purpose tag, so independent streams
//! (edge dropping, feature masking, initialization, batching) never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derives a sub-seed from `(base, tag, index)`.
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(base: u64, tag: &str, index: u64) -> Rng {
    rng_from_seed(derive_seed(base, tag, index))
}
