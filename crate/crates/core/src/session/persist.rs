use std::fs;
use std::path::Path;

use super::SessionState;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// Canonical pretty JSON; equal states always produce equal bytes.
pub fn to_json(state: &SessionState) -> Result<String> {
    let mut s = serde_json::to_string_pretty(state).map_err(|e| Error::Malformed(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<SessionState> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        if e.is_eof() {
            Error::Truncated(e.to_string())
        } else {
            Error::Malformed(e.to_string())
        }
    })?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing schema_version".into()))?;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
    }
    let state: SessionState = serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
    state.check()?;
    Ok(state)
}

pub fn save_session(state: &SessionState, path: &Path) -> Result<()> {
    // Write-then-rename so a crash never leaves a half-written log.
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, to_json(state)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_session(path: &Path) -> Result<SessionState> {
    from_json(&fs::read_to_string(path)?)
}
