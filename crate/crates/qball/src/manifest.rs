//! Run manifests: written before a scenario starts so a run directory is
//! self-describing and reproducible.

use crate::error::Result;
use crate::experiments::ScenarioConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DETERMINISM_NOTE: &str =
    "seedless and deterministic: re-running this manifest reproduces all outputs bit-identically";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Path the config was loaded from, when it came from a file.
    pub config_path: Option<String>,
    /// The fully resolved scenario; re-running uses exactly this.
    pub config: ScenarioConfig,
    pub out_dir: String,
    pub determinism: String,
}

impl RunManifest {
    pub fn new(config: ScenarioConfig, config_path: Option<String>, out_dir: &Path) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_path,
            config,
            out_dir: out_dir.display().to_string(),
            determinism: DETERMINISM_NOTE.to_string(),
        }
    }

    /// Write `manifest.json` into the run directory. Must happen before any
    /// run output.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(out_dir.join("manifest.json"), json)?;
        Ok(())
    }
}
