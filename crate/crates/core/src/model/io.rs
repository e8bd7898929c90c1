//! Versioned binary weight files.
//!
//! Layout: magic "NBTS", format version (u32 LE), the JSON-serialized
//! ModelConfig (u64 length prefix), then each tensor in key order as
//! (name length u32, name bytes, rows u64, cols u64, little-endian f64 data).

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::ParamStore;
use crate::tensor::Matrix;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"NBTS";
const VERSION: u32 = 1;

pub fn save_params(store: &ParamStore, cfg: &ModelConfig, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let cfg_json = serde_json::to_vec(cfg)
        .map_err(|e| Error::WeightFile(format!("config serialization failed: {e}")))?;
    out.extend_from_slice(&(cfg_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&cfg_json);
    out.extend_from_slice(&(store.len() as u64).to_le_bytes());
    for (name, tensor) in store.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.rows as u64).to_le_bytes());
        out.extend_from_slice(&(tensor.cols as u64).to_le_bytes());
        for v in &tensor.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::WeightFile(format!(
                "file truncated while reading {what} (needed {n} bytes at offset {})",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Loads a weight file. When `expected` is given, the stored configuration
/// must match it exactly.
pub fn load_params(path: &Path, expected: Option<&ModelConfig>) -> Result<(ModelConfig, ParamStore)> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut r = Reader { buf: &buf, pos: 0 };

    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::WeightFile(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::WeightFile(format!(
            "unsupported format version {version}, expected {VERSION}"
        )));
    }
    let cfg_len = r.u64("config length")? as usize;
    let cfg_bytes = r.take(cfg_len, "config")?;
    let cfg: ModelConfig = serde_json::from_slice(cfg_bytes)
        .map_err(|e| Error::WeightFile(format!("config deserialization failed: {e}")))?;
    if let Some(expected) = expected {
        if &cfg != expected {
            return Err(Error::WeightFile(
                "stored model configuration does not match the expected configuration".into(),
            ));
        }
    }

    let count = r.u64("tensor count")? as usize;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = r.u32("tensor name length")? as usize;
        let name = String::from_utf8(r.take(name_len, "tensor name")?.to_vec())
            .map_err(|e| Error::WeightFile(format!("invalid tensor name: {e}")))?;
        let rows = r.u64(&format!("shape of {name}"))? as usize;
        let cols = r.u64(&format!("shape of {name}"))? as usize;
        let bytes = r.take(rows * cols * 8, &format!("data of tensor {name}"))?;
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.insert(name, Matrix { rows, cols, data });
    }
    Ok((cfg, store))
}
