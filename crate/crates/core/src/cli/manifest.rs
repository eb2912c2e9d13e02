use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spec::EstimatorSpec;

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Arguments after the program name, verbatim.
    pub command: Vec<String>,
    pub spec: EstimatorSpec,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: Vec<String>, spec: EstimatorSpec, seed: u64) -> Self {
        Self {
            command,
            spec,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    /// Reads a manifest file or any result file that embeds one under a
    /// `manifest` key.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let v = match v.get("manifest") {
            Some(m) => m.clone(),
            None => v,
        };
        serde_json::from_value(v).map_err(|e| Error::Parse {
            line: 0,
            msg: format!("not a run manifest: {e}"),
        })
    }
}

pub(crate) fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
