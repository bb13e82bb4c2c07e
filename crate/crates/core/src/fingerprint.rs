//! Stable content hashes for configs and artifacts.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// First 8 bytes of the SHA-256 of `bytes`, little-endian.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Hash of the canonical JSON encoding of `value`. Struct fields serialize
/// in declaration order, so the encoding is stable for a given type.
pub fn config_hash<T: Serialize>(value: &T) -> u64 {
    let json = serde_json::to_vec(value).expect("config types serialize");
    hash_bytes(&json)
}

pub fn hash_f64s<'a>(values: impl IntoIterator<Item = &'a f64>) -> u64 {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

pub fn to_hex(hash: u64) -> String {
    format!("{hash:016x}")
}
