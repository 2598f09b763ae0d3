//! Binary PGM (P5) and PPM (P6) reading and writing.

use std::path::Path;

use crate::error::{Error, Result};

/// Grayscale image with values in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Image {
    Gray(GrayImage),
    Rgb(RgbImage),
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.values.iter().map(|&v| quantize(v)));
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().flatten());
    out
}

pub fn encode(img: &Image) -> Vec<u8> {
    match img {
        Image::Gray(g) => encode_pgm(g),
        Image::Rgb(c) => encode_ppm(c),
    }
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    std::fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::BadImage(format!("expected a number at byte {start}")))
    }
}

/// Parses a binary PGM into [0, 1] values (divided by maxval).
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::BadImage("missing P5 magic".into()));
    }
    let mut c = HeaderCursor { bytes, pos: 2 };
    let width = c.number()?;
    let height = c.number()?;
    let maxval = c.number()?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::BadImage(format!("bad header {width}x{height} maxval {maxval}")));
    }
    c.pos += 1;
    let per = if maxval < 256 { 1 } else { 2 };
    let need = width.checked_mul(height).and_then(|n| n.checked_mul(per));
    let payload = bytes.get(c.pos..).unwrap_or_default();
    match need {
        Some(n) if payload.len() >= n => {
            let values = if per == 1 {
                payload[..n].iter().map(|&b| b as f64 / maxval as f64).collect()
            } else {
                payload[..n].chunks_exact(2).map(|p| u16::from_be_bytes([p[0], p[1]]) as f64 / maxval as f64).collect()
            };
            Ok(GrayImage { width, height, values })
        }
        _ => Err(Error::BadImage(format!("payload too short for {width}x{height}"))),
    }
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|e| Error::BadImage(format!("{}: {e}", path.display())))
}
