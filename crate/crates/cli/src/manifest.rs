//! Run manifests: a TOML record of what a command read, wrote and was asked to do.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        write!(s, "{b:02x}").expect("writing to a String");
    }
    s
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex_digest(&bytes))
}

pub struct Manifest {
    command: &'static str,
    config: Table,
    param_hash: String,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    traces: Vec<PathBuf>,
    extra: Table,
}

impl Manifest {
    /// `config` is the resolved job; its canonical TOML form is hashed.
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Result<Self> {
        let config = Table::try_from(config).context("serializing job config")?;
        let param_hash = hex_digest(toml::to_string(&config)?.as_bytes());
        Ok(Self {
            command,
            config,
            param_hash,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            traces: Vec::new(),
            extra: Table::new(),
        })
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seeds.push(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn trace(&mut self, path: &Path) -> &mut Self {
        self.traces.push(path.to_path_buf());
        self
    }

    pub fn extra(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.extra.insert(key.to_string(), value.into());
        self
    }

    fn files(paths: &[PathBuf]) -> Result<Value> {
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            let mut t = Table::new();
            t.insert("path".into(), Value::String(p.display().to_string()));
            t.insert("sha256".into(), Value::String(file_digest(p)?));
            out.push(Value::Table(t));
        }
        Ok(Value::Array(out))
    }

    /// Writes the manifest to `path` after hashing every input and output file.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut t = Table::new();
        t.insert("command".into(), Value::String(self.command.into()));
        t.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        t.insert("param_hash".into(), Value::String(self.param_hash.clone()));
        // TOML integers are i64; seeds are stored as strings to keep the full u64 range
        t.insert("seeds".into(), Value::Array(self.seeds.iter().map(|s| Value::String(s.to_string())).collect()));
        t.insert(
            "traces".into(),
            Value::Array(self.traces.iter().map(|p| Value::String(p.display().to_string())).collect()),
        );
        t.insert("inputs".into(), Self::files(&self.inputs)?);
        t.insert("outputs".into(), Self::files(&self.outputs)?);
        if !self.extra.is_empty() {
            t.insert("summary".into(), Value::Table(self.extra.clone()));
        }
        t.insert("config".into(), Value::Table(self.config.clone()));
        std::fs::write(path, toml::to_string(&t)?).with_context(|| format!("writing manifest {}", path.display()))
    }
}

/// Conventional manifest location next to a command's primary output.
pub fn manifest_path(primary: &Path) -> PathBuf {
    crate::config::sibling(primary, ".manifest.toml")
}
