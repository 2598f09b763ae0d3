//! MSTAR Phoenix-format chips: an ASCII `key= value` header bracketed by
//! `[PhoenixHeaderVer..]` and `[EndofPhoenixHeader]`, then (after the
//! Phoenix and optional native headers) rows×cols big-endian `f32`
//! magnitudes followed by as many phase values.

use super::{fit_to_size, min_max_normalize, SarImage};
use crate::error::{Error, Result};

pub const SENTINEL: &[u8] = b"[PhoenixHeaderVer";
pub const END_MARKER: &[u8] = b"[EndofPhoenixHeader]";

#[derive(Debug, Clone, PartialEq)]
pub struct PhoenixFile {
    /// Header entries in file order.
    pub header: Vec<(String, String)>,
    pub rows: usize,
    pub cols: usize,
    /// Normalized, center-cropped/padded magnitude; label is 0 until the
    /// caller assigns one.
    pub image: SarImage,
}

impl PhoenixFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

fn parse_header(text: &[u8]) -> Vec<(String, String)> {
    String::from_utf8_lossy(text)
        .lines()
        .filter_map(|line| {
            let (k, v) = line.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn required(header: &[(String, String)], key: &str) -> Result<usize> {
    let (_, v) = header.iter().find(|(k, _)| k == key).ok_or_else(|| Error::MissingKey(key.to_string()))?;
    v.parse().map_err(|_| Error::BadHeaderValue { key: key.to_string(), value: v.clone() })
}

/// Parses a Phoenix chip and returns its magnitude, min-max normalized and
/// fitted to `target`×`target`. Never panics on malformed input.
pub fn parse_mstar_phoenix(bytes: &[u8], target: usize) -> Result<PhoenixFile> {
    if !bytes.starts_with(SENTINEL) {
        return Err(Error::MissingSentinel);
    }
    let end = find(bytes, END_MARKER).ok_or_else(|| Error::MissingKey("[EndofPhoenixHeader]".into()))?;
    let header = parse_header(&bytes[..end]);
    let rows = required(&header, "NumberOfRows")?;
    let cols = required(&header, "NumberOfColumns")?;
    let header_len = required(&header, "PhoenixHeaderLength")?;
    let native_len = match header.iter().find(|(k, _)| k == "NativeHeaderLength") {
        Some(_) => required(&header, "NativeHeaderLength")?,
        None => 0,
    };
    if rows == 0 || cols == 0 {
        return Err(Error::BadHeaderValue { key: "NumberOfRows/NumberOfColumns".into(), value: format!("{rows}x{cols}") });
    }
    let plane = rows.checked_mul(cols).and_then(|n| n.checked_mul(4));
    let expected = plane
        .and_then(|p| p.checked_mul(2))
        .and_then(|p| p.checked_add(header_len))
        .and_then(|p| p.checked_add(native_len))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload { expected, actual: bytes.len() });
    }
    let start = header_len + native_len;
    let plane = plane.expect("bounded by the length check");
    let mut magnitude: Vec<f64> = bytes[start..start + plane]
        .chunks_exact(4)
        .map(|c| f32::from_be_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if magnitude.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinitePayload);
    }
    min_max_normalize(&mut magnitude);
    let values = fit_to_size(&magnitude, rows, cols, target);
    Ok(PhoenixFile {
        header,
        rows,
        cols,
        image: SarImage { height: target, width: target, values, label: 0, source: String::new() },
    })
}

/// Writes a minimal Phoenix chip. Used for fixtures and round-trip checks.
pub fn encode_phoenix(rows: usize, cols: usize, magnitude: &[f32], phase: &[f32], extra: &[(&str, &str)]) -> Vec<u8> {
    let mut body = String::new();
    for (k, v) in extra {
        body.push_str(&format!("{k}= {v}\n"));
    }
    body.push_str(&format!("NumberOfColumns= {cols}\nNumberOfRows= {rows}\n"));
    let fixed = |len: usize| format!("[PhoenixHeaderVer01.5]\nPhoenixHeaderLength= {len:08}\n{body}[EndofPhoenixHeader]\n");
    let header_len = fixed(0).len();
    let mut out = fixed(header_len).into_bytes();
    for v in magnitude.iter().chain(phase) {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}
