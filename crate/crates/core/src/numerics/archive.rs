//! Flat named-tensor container.
//!
//! The file is a plain concatenation of entries, read until end of file:
//!
//! ```text
//! u32 LE   name length in bytes
//! [u8]     UTF-8 name
//! u32 LE   rank
//! u64 LE   dims, `rank` times
//! f32 LE   payload, product(dims) values, row-major
//! ```
//!
//! Values are stored as 32-bit floats; saving what was loaded reproduces the
//! file byte for byte.

use std::path::Path;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

pub type NamedTensors = Vec<(String, Tensor<f32>)>;

pub fn encode(entries: &[(String, Tensor<f32>)]) -> Vec<u8> {
    let mut buf = Vec::new();
    for (name, t) in entries {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
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
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Archive(format!("truncated while reading {what} at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<NamedTensors> {
    let mut r = Reader { bytes, pos: 0 };
    let mut out = Vec::new();
    while r.pos < bytes.len() {
        let name_len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|e| Error::Archive(format!("entry name is not UTF-8: {e}")))?
            .to_owned();
        let rank = r.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64("dimension")? as usize);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Archive(format!("`{name}`: dimensions overflow")))?;
        let payload = r.take(count.saturating_mul(4), "payload")?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let tensor = Tensor::new(shape, data).map_err(|e| Error::Archive(format!("`{name}`: {e}")))?;
        out.push((name, tensor));
    }
    Ok(out)
}

pub fn save(path: &Path, entries: &[(String, Tensor<f32>)]) -> Result<()> {
    std::fs::write(path, encode(entries)).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<NamedTensors> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Converts to the archive's storage precision.
pub fn to_f32<T: Scalar>(entries: Vec<(String, Tensor<T>)>) -> NamedTensors {
    entries.into_iter().map(|(n, t)| (n, t.cast())).collect()
}
