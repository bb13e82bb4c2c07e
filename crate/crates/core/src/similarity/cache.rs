//! Binary similarity cache.
//!
//! Layout (little-endian): 8-byte magic `GCLSIM01`, `n: u64`, kind `u8`
//! (0 structural, 1 feature, 2 fused), config hash `u64`, then `n*n` row-major
//! `f64` values.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{SimilarityKind, SimilarityMatrix};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"GCLSIM01";
const HEADER_LEN: usize = 8 + 8 + 1 + 8;

fn kind_tag(kind: SimilarityKind) -> u8 {
    match kind {
        SimilarityKind::Structural => 0,
        SimilarityKind::Feature => 1,
        SimilarityKind::Fused => 2,
    }
}

pub fn encode(sim: &SimilarityMatrix, config_hash: u64) -> Vec<u8> {
    let n = sim.size();
    let mut buf = Vec::with_capacity(HEADER_LEN + n * n * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.push(kind_tag(sim.kind()));
    buf.extend_from_slice(&config_hash.to_le_bytes());
    for v in sim.as_array().iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

/// Decodes a cache image. Returns the matrix and the stored config hash.
pub fn decode(bytes: &[u8]) -> Result<(SimilarityMatrix, u64)> {
    let bad = |msg: &str| Error::Input(format!("similarity cache: {msg}"));
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("missing or unknown header"));
    }
    let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let n = usize::try_from(u64_at(8)).map_err(|_| bad("node count overflows"))?;
    let kind = match bytes[16] {
        0 => SimilarityKind::Structural,
        1 => SimilarityKind::Feature,
        2 => SimilarityKind::Fused,
        t => return Err(bad(&format!("unknown kind tag {t}"))),
    };
    let hash = u64_at(17);
    let expected = n
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| bad("node count overflows"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(bad(&format!(
            "expected {expected} payload bytes for n={n}, found {}",
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = Array2::from_shape_vec((n, n), values).expect("length checked");
    Ok((SimilarityMatrix::new(values, kind)?, hash))
}

pub fn write(path: &Path, sim: &SimilarityMatrix, config_hash: u64) -> Result<()> {
    fs::write(path, encode(sim, config_hash)).map_err(|e| Error::io(path, e))
}

/// Loads a cached matrix, or `None` when the file is absent or was written
/// under a different config hash.
pub fn read(path: &Path, config_hash: u64) -> Result<Option<SimilarityMatrix>> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let (sim, stored) = decode(&bytes)?;
    Ok((stored == config_hash).then_some(sim))
}
