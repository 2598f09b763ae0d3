//! Flat binary checkpoint format.
//!
//! ```text
//! "ATTNATR1"
//! repeat until EOF:
//!   u32 LE name length, UTF-8 name
//!   u32 LE rank, rank × u32 LE extents
//!   product(extents) × f64 LE values
//! ```

use std::path::Path;

use super::param::Parameterized;
use crate::error::{Error, Result};
use crate::tensor::{numel, Tensor};

pub const MAGIC: &[u8; 8] = b"ATTNATR1";

pub fn encode<'a>(entries: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for (name, t) in entries {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::BadCheckpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Tensor)>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadCheckpoint("missing ATTNATR1 magic".into()));
    }
    let mut r = Reader { bytes, pos: MAGIC.len() };
    let mut entries = Vec::new();
    while r.pos < bytes.len() {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::BadCheckpoint("parameter name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32()?;
        let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let count = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let raw = count
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::BadCheckpoint(format!("{name}: extents overflow")))
            .and_then(|n| r.take(n))?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let t = Tensor::new(shape, data).map_err(|e| Error::BadCheckpoint(format!("{name}: {e}")))?;
        debug_assert_eq!(numel(t.shape()), t.len());
        entries.push((name, t));
    }
    Ok(entries)
}

pub fn to_bytes(model: &dyn Parameterized) -> Vec<u8> {
    let params = model.params();
    encode(params.iter().map(|p| (p.name.as_str(), &p.value)))
}

pub fn save(model: &dyn Parameterized, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_into(model: &mut dyn Parameterized, path: &Path) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model.load_named(&decode(&bytes)?)
}
