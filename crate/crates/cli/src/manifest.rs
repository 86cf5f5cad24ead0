//! Run manifests written next to command outputs.

use pdscbf_core::ScenarioConfig;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Record of one CLI invocation: the resolved configuration, what was
/// written where, and how long it took. Every listed output exists by the
/// time the manifest itself is written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    pub scenario: ScenarioConfig,
    /// Subcommand-specific parameters after defaulting.
    pub parameters: serde_json::Value,
    /// Headline numbers of the run (minimum barrier value, distances, ...).
    pub summary: serde_json::Value,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(subcommand: &str, scenario: ScenarioConfig) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
            scenario,
            parameters: serde_json::Value::Null,
            summary: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("manifest serializes"))
    }
}
