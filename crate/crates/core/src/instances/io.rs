use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Instance, InstanceError};

/// Current JSON schema version.
pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    version: u64,
    #[serde(flatten)]
    instance: &'a Instance,
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<(), InstanceError> {
    let text = serde_json::to_string_pretty(&Envelope { version: SCHEMA_VERSION, instance: inst }).expect("instances serialise");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<Instance, InstanceError> {
    parse_instance(&std::fs::read_to_string(path)?)
}

/// Parses `{version, kind, data}`.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let value: Value = serde_json::from_str(text).map_err(|e| InstanceError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })?;
    let version = value
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| InstanceError::Field("missing or non-integer \"version\"".into()))?;
    if version != SCHEMA_VERSION {
        return Err(InstanceError::UnsupportedVersion(version));
    }
    let mut obj = value;
    if let Some(map) = obj.as_object_mut() {
        map.remove("version");
    }
    let kind = obj.get("kind").and_then(Value::as_str).unwrap_or("<missing>").to_string();
    serde_json::from_value(obj).map_err(|e| InstanceError::Field(format!("kind {kind}: {e}")))
}

/// One row of a corpus manifest CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: String,
    pub path: String,
    pub seed: u64,
    /// TKP window size `B` (ignored for other kinds).
    pub block_size: usize,
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), InstanceError> {
    let mut w = csv::Writer::from_path(path)?;
    if entries.is_empty() {
        w.write_record(["name", "kind", "path", "seed", "block_size"])?;
    }
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, InstanceError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Result<Vec<ManifestEntry>, csv::Error> = r.deserialize().collect();
    Ok(rows?)
}
