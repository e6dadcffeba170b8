use anyhow::{bail, Context as _};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

/// Contents of a `--config` file: option values keyed by long flag name.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub values: Map<String, Value>,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Value::Object(mut values) = value else {
        bail!("{}: the config must be a JSON object", path.display());
    };
    let seed = match values.remove("seed") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_u64().with_context(|| format!("{}: `seed` must be a non-negative integer", path.display()))?),
    };
    Ok(ConfigFile { seed, values })
}

/// Overlays the flags given on the command line onto the config-file values.
pub fn merge<T: Serialize + DeserializeOwned>(flags: T, file: &ConfigFile) -> anyhow::Result<T> {
    let Value::Object(given) = serde_json::to_value(&flags)? else {
        unreachable!("argument structs serialize to objects");
    };
    let known: Vec<&String> = given.keys().collect();
    if let Some(k) = file.values.keys().find(|k| !known.contains(k)) {
        bail!("unknown config field `{k}` for this subcommand");
    }
    let mut merged = file.values.clone();
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).context("invalid config value")
}
