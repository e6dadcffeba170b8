use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Version of the report layout described by `schema/report.schema.json`.
pub const SCHEMA_VERSION: &str = "psidocalc-report/1";

#[derive(Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub input_hashes: BTreeMap<String, String>,
    pub status: &'static str,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// What a subcommand hands back before the envelope is added.
pub struct Outcome {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub pass: bool,
    pub result: Value,
}

impl Outcome {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Self {
        Outcome {
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            seed,
            inputs: BTreeMap::new(),
            pass: true,
            result: Value::Null,
        }
    }

    pub fn hash_text(&mut self, name: &str, text: &str) {
        self.inputs.insert(name.to_string(), sha256(text.as_bytes()));
    }

    pub fn hash_file(&mut self, name: &str, path: &std::path::Path) -> anyhow::Result<()> {
        let bytes = std::fs::read(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        self.inputs.insert(name.to_string(), sha256(&bytes));
        Ok(())
    }

    pub fn finish(mut self, pass: bool, result: impl Serialize) -> anyhow::Result<Self> {
        self.pass = pass;
        self.result = serde_json::to_value(result)?;
        Ok(self)
    }

    pub fn into_report(self, wall_time_s: Option<f64>) -> Report {
        Report {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: strip_nulls(self.config),
            seed: self.seed,
            input_hashes: self.inputs,
            status: if self.pass { "pass" } else { "fail" },
            result: self.result,
            wall_time_s,
        }
    }
}

pub fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        other => other,
    }
}
