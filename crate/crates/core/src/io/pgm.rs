//! Binary PGM (P5) graymaps with maxval 255.
//!
//! Soft masks quantize to `round(255 * v)` on write and map back as
//! `byte / 255` on read, so one round trip moves a value by at most `1/510`.
//! Hard masks binarize at byte 128, which is exactly `v >= 0.5` on the
//! decoded values. Label maps spread object indices evenly over the byte
//! range (`round(255 * label / objects)`) so single-object maps stay plain
//! 0/255 masks.

use std::fs;
use std::path::Path;

use crate::directional::SoftMask;
use crate::error::{Error, Result};
use crate::fusion::LabelMap;

fn format_err(reason: impl Into<String>) -> Error {
    Error::PgmFormat { reason: reason.into() }
}

/// Writes a soft mask, quantizing each value to `round(255 * v)`.
pub fn write_pgm(path: &Path, mask: &SoftMask) -> Result<()> {
    let header = format!("P5\n{} {}\n255\n", mask.width(), mask.height());
    let mut bytes = header.into_bytes();
    bytes.extend(mask.as_slice().iter().map(|&v| (255.0 * v).round() as u8));
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes a label map with labels spread over the byte range.
pub fn write_label_pgm(path: &Path, labels: &LabelMap, objects: usize) -> Result<()> {
    assert!(objects >= 1, "objects must be >= 1");
    assert!(labels.as_slice().iter().all(|&l| (l as usize) <= objects), "label exceeds objects");
    let header = format!("P5\n{} {}\n255\n", labels.width(), labels.height());
    let mut bytes = header.into_bytes();
    bytes.extend(
        labels
            .as_slice()
            .iter()
            .map(|&l| (255.0 * l as f64 / objects as f64).round() as u8),
    );
    fs::write(path, bytes)?;
    Ok(())
}

// PGM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
struct TokenReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> TokenReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err("unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| format_err("non-ascii header token"))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse().map_err(|_| format_err(format!("invalid {what}: {tok:?}")))
    }
}

/// Reads a P5 graymap into a soft mask with values `byte / 255`.
pub fn read_pgm(path: &Path) -> Result<SoftMask> {
    let bytes = fs::read(path)?;
    let mut reader = TokenReader::new(&bytes);
    let magic = reader.token()?;
    if magic != "P5" {
        return Err(format_err(format!("expected P5, got {magic:?}")));
    }
    let width = reader.number("width")?;
    let height = reader.number("height")?;
    let maxval = reader.number("maxval")?;
    if maxval != 255 {
        return Err(format_err(format!("expected maxval 255, got {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(format_err("zero dimension"));
    }
    // Exactly one whitespace byte separates the maxval from the raster.
    if reader.pos >= bytes.len() || !bytes[reader.pos].is_ascii_whitespace() {
        return Err(format_err("missing raster separator"));
    }
    let raster = &bytes[reader.pos + 1..];
    let expected = width * height;
    if raster.len() < expected {
        return Err(Error::TruncatedPayload { expected, got: raster.len() });
    }
    if raster.len() > expected {
        return Err(Error::SizeMismatch { expected, got: raster.len() });
    }
    let data = raster.iter().map(|&b| b as f64 / 255.0).collect();
    Ok(SoftMask::new(height, width, data))
}

/// Reads a label map written by [`write_label_pgm`], mapping each byte back
/// to the nearest label in `0..=objects`.
pub fn read_label_pgm(path: &Path, objects: usize) -> Result<LabelMap> {
    assert!(objects >= 1, "objects must be >= 1");
    let soft = read_pgm(path)?;
    let labels = soft
        .as_slice()
        .iter()
        .map(|&v| (v * objects as f64).round() as u16)
        .collect();
    Ok(LabelMap::new(soft.height(), soft.width(), labels))
}
