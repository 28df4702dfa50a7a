use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

/// JSON with object keys sorted at every level.
pub fn canonical_json(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical_json(&map[k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => format!(
            "[{}]",
            items
                .iter()
                .map(canonical_json)
                .collect::<Vec<_>>()
                .join(",")
        ),
        other => other.to_string(),
    }
}

pub fn digest<T: Serialize>(config: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(config).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical_json(&v).as_bytes())))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub struct Run {
    pub command: &'static str,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub digest: String,
    started: String,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn start<T: Serialize>(
        command: &'static str,
        out_dir: &Path,
        seed: u64,
        config: &T,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
        Ok(Self {
            command,
            out_dir: out_dir.to_path_buf(),
            seed,
            digest: digest(config)?,
            started: now(),
            outputs: Vec::new(),
        })
    }

    pub fn output(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.outputs.push(path.clone());
        path
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.manifest.json", self.command))
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let path = self.manifest_path();
        let manifest = RunManifest {
            command: self.command.to_string(),
            argv: std::env::args().collect(),
            config_digest: self.digest,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started,
            finished: now(),
            outputs: self
                .outputs
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|f| f.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
        };
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
