// SPDX-License-Identifier: MIT OR Apache-2.0

//! Canonical JSON text and atomic file output.
//!
//! Documents go through `serde_json::Value`, whose object map is ordered by
//! key, so field order never depends on struct layout. Floats print in their
//! shortest round-trip form and every file ends with a single LF.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

fn to_value<S: Serialize>(value: &S) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| Error::invalid(format!("cannot serialize: {e}")))
}

/// Pretty-printed document with sorted keys and a trailing newline.
pub fn to_canonical_string<S: Serialize>(value: &S) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&to_value(value)?)
        .map_err(|e| Error::invalid(format!("cannot serialize: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Single-line form used for record streams (no trailing newline).
pub fn to_canonical_line<S: Serialize>(value: &S) -> Result<String> {
    serde_json::to_string(&to_value(value)?).map_err(|e| Error::invalid(format!("cannot serialize: {e}")))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_document<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    write_atomic(path, to_canonical_string(value)?.as_bytes())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn json_error(path: &Path, e: &serde_json::Error) -> Error {
    Error::format(format!("{}:{}:{}", path.display(), e.line(), e.column()), e.to_string())
}

/// Parses a whole-file JSON document.
pub fn read_document<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| json_error(path, &e))
}

/// Parses a document that carries a `schema_version` field, refusing other
/// versions before looking at the remaining fields.
pub fn read_versioned<D: DeserializeOwned>(path: &Path, expected: u64) -> Result<D> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
    match value.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == expected => {}
        Some(found) => return Err(Error::Version { found, expected }),
        None => {
            return Err(Error::format(
                path.display().to_string(),
                "missing or non-integer `schema_version`",
            ))
        }
    }
    serde_json::from_value(value).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[derive(Serialize)]
    struct Unordered {
        zeta: f64,
        alpha: u32,
        nested: HashMap<String, f64>,
    }

    #[test]
    fn keys_are_sorted_and_floats_round_trip() {
        let mut nested = HashMap::new();
        nested.insert("b".to_owned(), 0.1 + 0.2);
        nested.insert("a".to_owned(), 1e-300);
        let text = to_canonical_string(&Unordered {
            zeta: 2.5,
            alpha: 1,
            nested,
        })
        .unwrap();
        assert_eq!(
            text,
            "{\n  \"alpha\": 1,\n  \"nested\": {\n    \"a\": 1e-300,\n    \"b\": 0.30000000000000004\n  },\n  \"zeta\": 2.5\n}\n"
        );
        assert_eq!(
            to_canonical_line(&Unordered {
                zeta: 2.5,
                alpha: 1,
                nested: HashMap::new()
            })
            .unwrap(),
            "{\"alpha\":1,\"nested\":{},\"zeta\":2.5}"
        );
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn version_gate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.json");
        std::fs::write(&path, "{\"schema_version\": 7, \"unknown\": true}").unwrap();
        let err = read_versioned::<Value>(&path, 1).unwrap_err();
        assert!(matches!(err, Error::Version { found: 7, expected: 1 }));
        std::fs::write(&path, "{\"schema_version\": 1,").unwrap();
        let err = read_versioned::<Value>(&path, 1).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
