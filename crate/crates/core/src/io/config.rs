//! `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment (full-line or trailing),
//! blank lines are ignored, keys and values are trimmed, UTF-8 throughout.
//! The same format carries fusion-head parameters and synthetic-sequence
//! specs.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

fn config_err(reason: impl Into<String>) -> Error {
    Error::Config { reason: reason.into() }
}

/// Parsed key/value configuration.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(i) => &raw_line[..i],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(format!(
                    "line {}: expected `key = value`, got {raw_line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(config_err(format!("line {}: empty key", lineno + 1)));
            }
            entries.insert(key.to_string(), value.to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| config_err(format!("missing key `{key}`")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self.required(key)?;
        raw.parse().map_err(|_| config_err(format!("invalid number for `{key}`: {raw:?}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let raw = self.required(key)?;
        raw.parse().map_err(|_| config_err(format!("invalid integer for `{key}`: {raw:?}")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        let raw = self.required(key)?;
        raw.parse().map_err(|_| config_err(format!("invalid integer for `{key}`: {raw:?}")))
    }

    pub fn get_f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(raw) => {
                raw.parse().map_err(|_| config_err(format!("invalid number for `{key}`: {raw:?}")))
            }
            None => Ok(default),
        }
    }
}
