//! Report envelopes and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use plunge_core::analysis::Check;
use serde::Serialize;
use serde_json::Value;

use crate::{RunConfig, VERSION};

/// Top-level shape of every JSON file; payload sections are present only when relevant.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a> {
    pub config: &'a RunConfig,
    pub version: &'static str,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Value>,
}

impl<'a> Envelope<'a> {
    pub fn new(config: &'a RunConfig, checks: Vec<Check>) -> Self {
        Self {
            config,
            version: VERSION,
            checks,
            spectrum: None,
            basis: None,
            partition: None,
            theorem: None,
            calibration: None,
        }
    }
}

/// Serializes a payload section; non-finite floats become `null`.
pub fn section<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("payload types serialize to JSON")
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json(dir: &Path, name: &str, envelope: &Envelope) -> std::io::Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(envelope).map_err(std::io::Error::other)?;
    bytes.push(b'\n');
    let path = dir.join(name);
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// `index,lambda` rows with 1-based indices; values in shortest round-trip form.
pub fn eigenvalue_csv(lambdas: &[f64]) -> String {
    let mut out = String::from("index,lambda\n");
    for (i, l) in lambdas.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, l));
    }
    out
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
