use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hatano_core::potential::GENERATOR_ID;
use serde::{Deserialize, Serialize};

use crate::{CliError, ExperimentConfig};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub package: String,
    pub version: String,
    pub profile: String,
}

impl BuildInfo {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            profile: if cfg!(debug_assertions) { "debug" } else { "release" }.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub generator_id: String,
    pub build: BuildInfo,
    pub wall_time_seconds: f64,
    /// Paths relative to the manifest, in the order written.
    pub files: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// An output directory that remembers every file written into it.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Opens `rel` for writing, creating parent directories.
    pub fn file(&mut self, rel: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(rel.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let mut f = self.file(rel)?;
        f.write_all(bytes)?;
        f.flush()?;
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, rel: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(self, command: &str, config: &ExperimentConfig) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            command: command.to_string(),
            config: config.clone(),
            generator_id: GENERATOR_ID.to_string(),
            build: BuildInfo::current(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            files: self.files.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(manifest)
    }
}
