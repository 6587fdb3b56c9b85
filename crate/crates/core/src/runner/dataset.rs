use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::RunConfig;
use super::truncation::TruncationDiagnostics;
use crate::error::{Error, Result};
use crate::io::content_hash;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "message")]
pub enum RunStatus {
    Ok,
    /// a solver gave up; the payload may be partial
    Failed(String),
}

/// Everything a run produces: the JSON sidecar and the CSV payloads.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub config: RunConfig,
    pub status: RunStatus,
    pub truncation: TruncationDiagnostics,
    /// task-specific summary values
    pub summary: Value,
    /// wall-clock seconds per stage; left out in reproducible mode
    pub timings: Option<Vec<(String, f64)>>,
    /// `(relative path, contents)` in writing order
    pub files: Vec<(String, String)>,
}

impl Dataset {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn metadata(&self) -> Value {
        let hashes: serde_json::Map<String, Value> =
            self.files.iter().map(|(n, c)| (n.clone(), Value::String(content_hash(c.as_bytes())))).collect();
        let mut joined = Vec::new();
        for (n, c) in &self.files {
            joined.extend_from_slice(n.as_bytes());
            joined.push(0);
            joined.extend_from_slice(c.as_bytes());
        }
        let timings =
            self.timings.as_ref().map(|t| Value::Object(t.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect()));
        serde_json::json!({
            "format_version": FORMAT_VERSION,
            "versions": { "selforg": env!("CARGO_PKG_VERSION") },
            "config": self.config,
            "task": self.config.task.name(),
            "run_status": self.status,
            "truncation": self.truncation,
            "summary": self.summary,
            "timings": timings,
            "files": hashes,
            "content_hash": content_hash(&joined),
        })
    }

    /// Writes `metadata.json` and every payload below `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, contents)?;
        }
        let mut meta = serde_json::to_string_pretty(&self.metadata())?;
        meta.push('\n');
        std::fs::write(dir.join("metadata.json"), meta)?;
        Ok(())
    }
}

/// The configuration echoed in a `metadata.json`.
pub fn config_from_metadata(text: &str) -> Result<RunConfig> {
    let meta: Value = serde_json::from_str(text)?;
    let cfg = meta.get("config").ok_or_else(|| Error::Config("metadata without `config`".into()))?;
    let cfg: RunConfig = serde_json::from_value(cfg.clone()).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
