//! Run manifests: every subcommand records its resolved options, inputs,
//! outputs, seed, and per-stage wall-clock. `rerun` re-executes the
//! recorded command, so deterministic runs are reproducible byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::files;
use crate::{CliError, Command};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Fully resolved command; `rerun` dispatches this directly.
    pub command: Command,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub timings_ms: BTreeMap<String, u128>,
}

impl RunManifest {
    pub fn new(subcommand: &str, command: Command) -> RunManifest {
        RunManifest {
            tool: "langsel".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            command,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        files::write_bytes(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> Result<RunManifest, CliError> {
        let text = files::read_to_string(path)?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("{}: not a valid run manifest", path.display()))?;
        Ok(manifest)
    }
}

/// Stage timer collecting wall-clock per named stage.
pub struct Stages {
    timings: BTreeMap<String, u128>,
    current: Option<(String, Instant)>,
}

impl Stages {
    pub fn new() -> Stages {
        Stages {
            timings: BTreeMap::new(),
            current: None,
        }
    }

    pub fn start(&mut self, name: &str) {
        self.finish();
        self.current = Some((name.to_string(), Instant::now()));
    }

    pub fn finish(&mut self) {
        if let Some((name, begun)) = self.current.take() {
            *self.timings.entry(name).or_insert(0) += begun.elapsed().as_millis();
        }
    }

    pub fn into_timings(mut self) -> BTreeMap<String, u128> {
        self.finish();
        self.timings
    }
}

/// Default manifest location next to the primary output.
pub fn default_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
