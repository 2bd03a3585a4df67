//! Artifact writers. Every file carries the same provenance block.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

const MODULES: &[&str] = &["laws", "env", "kernel", "tail", "sim", "harmonic"];

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Meta {
    pub command: String,
    pub label: String,
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub streams: u32,
    pub versions: BTreeMap<String, String>,
}

impl Meta {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let mut versions: BTreeMap<String, String> =
            MODULES.iter().map(|m| (m.to_string(), bpire_core::VERSION.to_string())).collect();
        versions.insert("cli".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            command: command.into(),
            label: cfg.label(),
            config_sha256: config_hash(cfg),
            seed: cfg.seed,
            workers: cfg.workers,
            streams: cfg.streams,
            versions,
        }
    }

    fn comment_lines(&self) -> String {
        let mut out = format!(
            "# command={}\n# label={}\n# config_sha256={}\n# seed={}\n# workers={}\n# streams={}\n",
            self.command, self.label, self.config_sha256, self.seed, self.workers, self.streams
        );
        for (m, v) in &self.versions {
            out.push_str(&format!("# version.{m}={v}\n"));
        }
        out
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the resolved configuration, command-line overrides included.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex_digest(&serde_json::to_vec(cfg).expect("config serializes"))
}

/// Compact float text: plain decimals in the usual range, scientific otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// Writes `{"meta": ..., <payload fields>}`.
    pub fn json<T: Serialize>(&self, name: &str, meta: &Meta, payload: &T) -> Result<PathBuf> {
        self.write(name, &json_bytes(meta, payload))
    }

    pub fn csv(&self, name: &str, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        self.write(name, &csv_bytes(meta, header, rows))
    }
}

pub fn json_bytes<T: Serialize>(meta: &Meta, payload: &T) -> Vec<u8> {
    let mut obj = serde_json::Map::new();
    obj.insert("meta".into(), serde_json::to_value(meta).expect("meta serializes"));
    match serde_json::to_value(payload).expect("payload serializes") {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(obj)).expect("json serializes");
    bytes.push(b'\n');
    bytes
}

pub fn csv_bytes(meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = meta.comment_lines().into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    w.flush().expect("in-memory csv");
    drop(w);
    out
}

/// Rows of a CSV artifact, skipping the comment block.
pub fn read_csv(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Usage(format!("{}: {other:?}", path.display())),
    })?;
    r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
