//! DFT1 binary tensor files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! bytes 0..4   magic "DFT1"
//! bytes 4..8   C as u32
//! bytes 8..12  H as u32
//! bytes 12..16 W as u32
//! bytes 16..   C*H*W IEEE-754 f32 values, (c, h, w) row-major
//! ```
//!
//! The declared sizes must match the payload length exactly; no compression.
//! Values are stored as f32, so a write/read round trip is bit-exact for any
//! tensor whose entries are f32-representable (which everything written by
//! this crate is, after the first write).

use std::fs;
use std::path::Path;

use crate::directional::RawFeatureMap;
use crate::error::{Error, Result};

pub const DFT_MAGIC: [u8; 4] = *b"DFT1";

const HEADER_LEN: usize = 16;

/// Serializes a tensor, narrowing values to f32.
pub fn write_dft(path: &Path, tensor: &RawFeatureMap) -> Result<()> {
    let (c, h, w) = (tensor.channels(), tensor.height(), tensor.width());
    assert!(c <= u32::MAX as usize && h <= u32::MAX as usize && w <= u32::MAX as usize);
    let mut bytes = Vec::with_capacity(HEADER_LEN + tensor.as_slice().len() * 4);
    bytes.extend_from_slice(&DFT_MAGIC);
    bytes.extend_from_slice(&(c as u32).to_le_bytes());
    bytes.extend_from_slice(&(h as u32).to_le_bytes());
    bytes.extend_from_slice(&(w as u32).to_le_bytes());
    for &v in tensor.as_slice() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a tensor, widening values to f64.
pub fn read_dft(path: &Path) -> Result<RawFeatureMap> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 {
        return Err(Error::TruncatedPayload { expected: HEADER_LEN, got: bytes.len() });
    }
    if bytes[..4] != DFT_MAGIC {
        return Err(Error::BadMagic { got: [bytes[0], bytes[1], bytes[2], bytes[3]] });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload { expected: HEADER_LEN, got: bytes.len() });
    }
    let read_u32 = |offset: usize| {
        u32::from_le_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]])
            as usize
    };
    let (c, h, w) = (read_u32(4), read_u32(8), read_u32(12));
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::InvalidHeader { reason: "zero dimension" });
    }
    let count = c
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .ok_or(Error::InvalidHeader { reason: "dimension overflow" })?;
    let expected = count * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload { expected, got: payload.len() });
    }
    if payload.len() > expected {
        return Err(Error::SizeMismatch { expected, got: payload.len() });
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    Ok(RawFeatureMap::new(c, h, w, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use std::env;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = env::temp_dir();
        p.push(format!("dirseg-dft-{}-{}", std::process::id(), name));
        p
    }

    // f32-representable random tensor, the format's value domain.
    fn random_tensor(c: usize, h: usize, w: usize, rng: &mut SplitMix64) -> RawFeatureMap {
        let data = (0..c * h * w)
            .map(|_| (rng.uniform() as f32 * 10.0 - 5.0) as f64)
            .collect();
        RawFeatureMap::new(c, h, w, data)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = SplitMix64::new(50);
        let path = temp_path("roundtrip.dft");
        for _ in 0..20 {
            let c = 1 + rng.index(6);
            let h = 1 + rng.index(5);
            let w = 1 + rng.index(5);
            let tensor = random_tensor(c, h, w, &mut rng);
            write_dft(&path, &tensor).unwrap();
            let back = read_dft(&path).unwrap();
            assert_eq!(tensor, back);
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn header_bytes_are_little_endian() {
        // C=512, H=30, W=54 -> 44 46 54 31, 00 02 00 00, 1E 00 00 00, 36 00 00 00
        let path = temp_path("header.dft");
        let tensor = RawFeatureMap::new(512, 30, 54, vec![0.0; 512 * 30 * 54]);
        write_dft(&path, &tensor).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], &[0x44, 0x46, 0x54, 0x31]);
        assert_eq!(&bytes[4..8], &[0x00, 0x02, 0x00, 0x00]);
        assert_eq!(&bytes[8..12], &[0x1E, 0x00, 0x00, 0x00]);
        assert_eq!(&bytes[12..16], &[0x36, 0x00, 0x00, 0x00]);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn distinct_error_cases() {
        let path = temp_path("badfile.dft");

        std::fs::write(&path, b"NOPE\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        assert!(matches!(read_dft(&path), Err(Error::BadMagic { .. })));

        // Truncated payload: declares 1x1x1 but carries no values.
        std::fs::write(&path, b"DFT1\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        let err = read_dft(&path).unwrap_err();
        assert!(matches!(err, Error::TruncatedPayload { expected: 4, got: 0 }));
        assert!(err.to_string().starts_with("truncated payload"));

        // Oversized payload.
        let mut bytes = b"DFT1\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00".to_vec();
        bytes.extend_from_slice(&[0u8; 8]);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_dft(&path), Err(Error::SizeMismatch { expected: 4, got: 8 })));

        // Truncated header.
        std::fs::write(&path, b"DFT1\x01\x00").unwrap();
        assert!(matches!(read_dft(&path), Err(Error::TruncatedPayload { .. })));

        // Zero dimension.
        std::fs::write(&path, b"DFT1\x00\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        assert!(matches!(read_dft(&path), Err(Error::InvalidHeader { .. })));

        std::fs::remove_file(&path).ok();
    }
}
