use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Array2<f64>,
    adam_m: Array2<f64>,
    adam_v: Array2<f64>,
}

/// Named dense parameters plus Adam moment estimates. Insertion order is
/// the canonical order for gradients and checkpoints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    step: u64,
}

/// Gradients aligned with a [`ParamStore`]'s parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Array2<f64>>);

impl Gradients {
    pub fn get(&self, store: &ParamStore, name: &str) -> &Array2<f64> {
        &self.0[store.index_of(name).expect("known parameter")]
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.0 {
            *g *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Array2<f64>) {
        assert!(self.index_of(name).is_none(), "duplicate parameter {name}");
        let zeros = Array2::zeros(value.raw_dim());
        self.params.push(Param {
            name: name.to_string(),
            adam_m: zeros.clone(),
            adam_v: zeros,
            value,
        });
    }

    /// Glorot-uniform initialization, `U(±sqrt(6 / (fan_in + fan_out)))`.
    pub fn add_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut Rng) {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let value = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit));
        self.add(name, value);
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> &Array2<f64> {
        &self.params[self.index_of(name).unwrap_or_else(|| panic!("no parameter {name}"))].value
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Array2<f64> {
        let i = self.index_of(name).unwrap_or_else(|| panic!("no parameter {name}"));
        &mut self.params[i].value
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients(self.params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect())
    }

    /// Hash over names, shapes and values (not optimizer state).
    pub fn fingerprint(&self) -> u64 {
        crate::fingerprint::hash_bytes(&encode_checkpoint(self, 0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. The store is left untouched if any new
/// value would be non-finite.
pub fn optimizer_step(params: &mut ParamStore, grads: &Gradients, hyper: &AdamConfig) -> Result<()> {
    if grads.0.len() != params.params.len() {
        return Err(Error::Input(format!(
            "{} gradients for {} parameters",
            grads.0.len(),
            params.params.len()
        )));
    }
    let t = params.step + 1;
    let bc1 = 1.0 - hyper.beta1.powi(t as i32);
    let bc2 = 1.0 - hyper.beta2.powi(t as i32);
    let mut staged = Vec::with_capacity(params.params.len());
    for (p, g) in params.params.iter().zip(&grads.0) {
        if p.value.raw_dim() != g.raw_dim() {
            return Err(Error::Input(format!("gradient shape mismatch for {}", p.name)));
        }
        let m = &p.adam_m * hyper.beta1 + g * (1.0 - hyper.beta1);
        let v = &p.adam_v * hyper.beta2 + &g.mapv(|x| x * x) * (1.0 - hyper.beta2);
        let mut value = p.value.clone();
        ndarray::Zip::from(&mut value).and(&m).and(&v).for_each(|w, &mi, &vi| {
            *w -= hyper.lr * (mi / bc1) / ((vi / bc2).sqrt() + hyper.eps);
        });
        if value.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical(format!(
                "Adam update produced non-finite values in {}; lower the learning rate \
                 (currently {})",
                p.name, hyper.lr
            )));
        }
        staged.push((value, m, v));
    }
    for (p, (value, m, v)) in params.params.iter_mut().zip(staged) {
        p.value = value;
        p.adam_m = m;
        p.adam_v = v;
    }
    params.step = t;
    Ok(())
}

// Checkpoint layout (little-endian): magic "GCLPARAM", version u32, config
// hash u64, count u32, then per parameter: name length u32, UTF-8 name,
// rows u64, cols u64, rows*cols f64 values.
const CKPT_MAGIC: &[u8; 8] = b"GCLPARAM";
const CKPT_VERSION: u32 = 1;

pub fn encode_checkpoint(store: &ParamStore, config_hash: u64) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CKPT_MAGIC);
    buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    buf.extend_from_slice(&config_hash.to_le_bytes());
    buf.extend_from_slice(&(store.params.len() as u32).to_le_bytes());
    for p in &store.params {
        buf.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(p.name.as_bytes());
        buf.extend_from_slice(&(p.value.nrows() as u64).to_le_bytes());
        buf.extend_from_slice(&(p.value.ncols() as u64).to_le_bytes());
        for v in p.value.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Input("checkpoint is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Returns the parameters (with fresh optimizer state) and the stored config hash.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ParamStore, u64)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CKPT_MAGIC {
        return Err(Error::Input("not a parameter checkpoint".into()));
    }
    let version = r.u32()?;
    if version != CKPT_VERSION {
        return Err(Error::Input(format!("unsupported checkpoint version {version}")));
    }
    let hash = r.u64()?;
    let count = r.u32()?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Input("checkpoint parameter name is not UTF-8".into()))?
            .to_string();
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Input("checkpoint shape overflows".into()))?;
        let raw = r.take(count.checked_mul(8).ok_or_else(|| Error::Input("checkpoint shape overflows".into()))?)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        store.add(&name, Array2::from_shape_vec((rows, cols), values).expect("length checked"));
    }
    if r.pos != bytes.len() {
        return Err(Error::Input("trailing bytes after checkpoint".into()));
    }
    Ok((store, hash))
}

impl ParamStore {
    pub fn save(&self, path: &Path, config_hash: u64) -> Result<()> {
        fs::write(path, encode_checkpoint(self, config_hash)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(ParamStore, u64)> {
        decode_checkpoint(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
