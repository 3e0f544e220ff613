//! Run directory management: every command echoes its configuration, seed
//! and version string before writing its artifacts.

use std::path::{Path, PathBuf};

use doobgen_core::Result;

use crate::config::RunConfig;

pub fn version_string() -> String {
    format!("doobgen-v{}", env!("CARGO_PKG_VERSION"))
}

/// Create the output directory and write config.txt and version.txt.
pub fn prepare(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(cfg.get("out.dir"));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.txt"), cfg.echo())?;
    std::fs::write(dir.join("version.txt"), format!("{}\n", version_string()))?;
    Ok(dir)
}

/// Write the JSON-style run metadata sidecar.
pub fn write_meta(dir: &Path, command: &str, cfg: &RunConfig, extra: serde_json::Value) -> Result<()> {
    let config: serde_json::Map<String, serde_json::Value> = cfg
        .entries()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let meta = serde_json::json!({
        "command": command,
        "version": version_string(),
        "config": config,
        "run": extra,
    });
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| doobgen_core::Error::Io(format!("meta: {e}")))?;
    std::fs::write(dir.join("run_meta.txt"), text + "\n")?;
    Ok(())
}
