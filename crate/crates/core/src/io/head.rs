//! Fusion-head persistence: a `key = value` file with keys `w0`..`w6` and
//! `b`, one per line, decimal notation.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::{FusionHead, CUE_CHANNELS};
use crate::io::config::Config;

// Plain decimal (no exponent) with enough digits for an exact f64 round trip
// at any magnitude.
fn format_decimal(x: f64) -> String {
    assert!(x.is_finite(), "head parameters must be finite");
    if x == 0.0 {
        return "0.0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let places = (18 - exponent).max(1) as usize;
    format!("{x:.places$}")
}

/// Writes head parameters in decimal notation, one `key = value` per line.
pub fn write_head(path: &Path, head: &FusionHead) -> Result<()> {
    let mut out = String::new();
    for (i, w) in head.weights.iter().enumerate() {
        out.push_str(&format!("w{i} = {}\n", format_decimal(*w)));
    }
    out.push_str(&format!("b = {}\n", format_decimal(head.bias)));
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_head(path: &Path) -> Result<FusionHead> {
    let cfg = Config::load(path)?;
    let mut head = FusionHead::zeros();
    for i in 0..CUE_CHANNELS {
        head.weights[i] = cfg.get_f64(&format!("w{i}"))?;
    }
    head.bias = cfg.get_f64("b")?;
    if !head.is_finite() {
        return Err(Error::Config { reason: "head parameters must be finite".into() });
    }
    Ok(head)
}
