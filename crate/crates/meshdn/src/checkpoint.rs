//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "DMDN" | version: u16 | count: u32
//! count x { name_len: u32 | name: utf-8 | rank: u32 | dims: u32 x rank | data: f32 x prod(dims) }
//! ```
//!
//! Values are stored as `f32`; loading widens them back to `f64`, so a
//! save after a load reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use meshdn_core::{NetConfig, NetParams, Tensor};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DMDN";
pub const VERSION: u16 = 1;

pub fn save_checkpoint(params: &NetParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.dims().len() as u32).to_le_bytes());
        for &d in t.dims() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &x in t.data() {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Checkpoint {
            offset: self.pos,
            msg: format!("truncated: {what} needs {n} bytes, {} left", self.bytes.len() - self.pos),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn error(&self, offset: usize, msg: String) -> Error {
        Error::Checkpoint { offset, msg }
    }
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<NetParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.error(0, "bad magic, not a checkpoint".into()));
    }
    let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(r.error(4, format!("unsupported version {version} (expected {VERSION})")));
    }
    let count = r.u32("tensor count")?;
    let mut tensors = BTreeMap::new();
    for i in 0..count {
        let start = r.pos;
        let len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| r.error(start + 4, format!("tensor {i}: name is not UTF-8")))?
            .to_owned();
        let rank_at = r.pos;
        let rank = r.u32("rank")? as usize;
        if rank > Tensor::MAX_RANK {
            return Err(r.error(rank_at, format!("tensor `{name}`: rank {rank} exceeds {}", Tensor::MAX_RANK)));
        }
        let dims = (0..rank).map(|_| r.u32("dims").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let data_at = r.pos;
        let raw = n
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| r.error(data_at, format!("tensor `{name}`: dims {dims:?} overflow")))
            .and_then(|n| r.take(n, &format!("data of `{name}`")))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let tensor = Tensor::new(&dims, data)?;
        if tensors.insert(name.clone(), tensor).is_some() {
            return Err(r.error(start, format!("duplicate tensor `{name}`")));
        }
    }
    if r.pos != bytes.len() {
        return Err(r.error(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(NetParams::from_map(tensors))
}

/// Loads and checks every tensor against `config`.
pub fn load_for(bytes: &[u8], config: &NetConfig) -> Result<NetParams> {
    let params = load_checkpoint(bytes)?;
    params.check(config)?;
    Ok(params)
}

pub fn read_checkpoint(path: &Path) -> Result<NetParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    load_checkpoint(&bytes).map_err(|e| e.in_file(path))
}

/// Reads a checkpoint and recovers its network widths from the tensor shapes.
pub fn read_model(path: &Path) -> Result<(NetParams, NetConfig)> {
    let params = read_checkpoint(path)?;
    let config = NetConfig::infer(&params).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    Ok((params, config))
}

pub fn write_checkpoint(path: &Path, params: &NetParams) -> Result<()> {
    std::fs::write(path, save_checkpoint(params)).map_err(|e| Error::file(path, e))
}
