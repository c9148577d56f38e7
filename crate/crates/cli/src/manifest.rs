//! Output files and the run manifest.

use std::path::PathBuf;

use qdot_core::config::{parse_table, Config};
use qdot_core::{Error, Result};
use serde_json::{json, Map, Value};
use toml::Table;

use crate::commands::Outcome;

pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED: &str = "resolved.toml";

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes the tables of `outcome`, the resolved config and the manifest.
/// Returns the paths of the last two.
pub fn write(command: &str, config: &Config, outcome: &Outcome, wall_time: f64) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    for (name, contents) in &outcome.files {
        std::fs::write(dir.join(name), contents)?;
    }
    let resolved = config.to_toml();
    let resolved_path = dir.join(RESOLVED);
    std::fs::write(&resolved_path, &resolved)?;

    let snapshot = serde_json::to_value(parse_table(&resolved)?).map_err(json_err)?;
    let details: Map<String, Value> = outcome.details.iter().cloned().collect();
    let manifest = json!({
        "command": command,
        "version": crate::VERSION,
        "config": snapshot,
        "details": details,
        "threads": rayon::current_num_threads(),
        "wall_time_s": wall_time,
        "outputs": outcome.files.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(),
    });
    let manifest_path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(json_err)?;
    text.push('\n');
    std::fs::write(&manifest_path, text)?;
    Ok(vec![resolved_path, manifest_path])
}

/// The config snapshot stored in a manifest.
pub fn config_from_manifest(text: &str) -> Result<Table> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("manifest is not valid JSON: {e}")))?;
    let config = value
        .get("config")
        .cloned()
        .ok_or_else(|| Error::Config("manifest has no `config` entry".into()))?;
    serde_json::from_value(config).map_err(|e| Error::Config(format!("manifest config: {e}")))
}
