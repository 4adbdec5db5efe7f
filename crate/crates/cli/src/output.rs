use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Config;

/// A failure reported to the caller as JSON on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub details: Option<Value>,
}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.to_string(),
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut error = json!({"kind": self.kind, "message": self.message});
        if let Some(d) = &self.details {
            error["details"] = d.clone();
        }
        json!({ "error": error })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<dialkm_core::Error> for CliError {
    fn from(e: dialkm_core::Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

/// Input file hashes plus the config fingerprint.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub inputs: BTreeMap<String, String>,
    pub config_fingerprint: String,
}

impl Manifest {
    pub fn new(config: &Config) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            inputs: BTreeMap::new(),
            config_fingerprint: config.fingerprint(),
        }
    }

    /// Records the SHA-256 of an input file under `role`.
    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
        self.inputs
            .insert(role.to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("manifest serializes")
    }
}

/// Command payload with the manifest and effective config attached.
pub fn envelope(payload: impl Serialize, manifest: &Manifest, config: &Config) -> Value {
    let mut obj = match serde_json::to_value(payload).expect("payload serializes") {
        Value::Object(map) => map,
        other => {
            let mut map = Map::new();
            map.insert("result".into(), other);
            map
        }
    };
    obj.insert("manifest".into(), manifest.to_value());
    obj.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    Value::Object(obj)
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}
