//! Flat key=value run-configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment; values may be
//! wrapped in single or double quotes; later assignments override earlier
//! ones. Key validation is left to the consumer, which knows its own key
//! set.

use std::collections::BTreeMap;

use crate::{Error, Result};

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::config(format!(
                "config line {}: bad key {key:?}",
                n + 1
            )));
        }
        let mut value = value.trim();
        if value.len() >= 2
            && ((value.starts_with('"') && value.ends_with('"'))
                || (value.starts_with('\'') && value.ends_with('\'')))
        {
            value = &value[1..value.len() - 1];
        }
        out.insert(key.to_string(), value.to_string());
    }
    Ok(out)
}
