//! Artifact writers. JSON artifacts wrap their payload with the toolkit
//! version and the resolved run configuration; CSV artifacts carry both on a
//! leading `#` comment line.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

pub fn envelope(run_config: &Value, key: &str, payload: impl Serialize) -> anyhow::Result<Value> {
    Ok(json!({
        "version": pulsenet::VERSION,
        "run_config": run_config,
        key: serde_json::to_value(payload)?,
    }))
}

pub fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_artifact(path: &Path, run_config: &Value, key: &str, payload: impl Serialize) -> anyhow::Result<()> {
    write_json(path, &envelope(run_config, key, payload)?)
}

pub fn write_csv(path: &Path, run_config: &Value, body: &str) -> anyhow::Result<()> {
    let text = format!("# pulsenet {} run_config={}\n{body}", pulsenet::VERSION, serde_json::to_string(run_config)?);
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
