//! Result files, column descriptions and the run manifest.

use crate::config::{ExperimentConfig, Format, MANIFEST_SCHEMA};
use crate::error::CliError;
use lyapunov_lab::estimators::Exclusion;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub tool_version: String,
    pub rng_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    /// Arguments of commands that run without a config document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arguments: Option<serde_json::Value>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub exclusions: Vec<Exclusion>,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one run and writes the manifest last.
pub struct RunWriter {
    dir: PathBuf,
    formats: Vec<Format>,
    command: String,
    config: Option<ExperimentConfig>,
    arguments: Option<serde_json::Value>,
    started: Instant,
    started_unix: u64,
    outputs: Vec<OutputDigest>,
    exclusions: Vec<Exclusion>,
}

impl RunWriter {
    pub fn new(command: &str, config: &ExperimentConfig) -> Result<Self, CliError> {
        let mut w = Self::bare(command, &config.outputs.dir, &config.outputs.formats)?;
        w.config = Some(config.clone());
        Ok(w)
    }

    pub fn with_arguments(command: &str, dir: &Path, formats: &[Format], arguments: serde_json::Value) -> Result<Self, CliError> {
        let mut w = Self::bare(command, dir, formats)?;
        w.arguments = Some(arguments);
        Ok(w)
    }

    fn bare(command: &str, dir: &Path, formats: &[Format]) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            formats: formats.to_vec(),
            command: command.into(),
            config: None,
            arguments: None,
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs: Vec::new(),
            exclusions: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn record_exclusions(&mut self, e: &[Exclusion]) {
        self.exclusions.extend_from_slice(e);
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(OutputDigest {
            file: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// A CSV file plus `<stem>.columns.txt` describing each column.
    pub fn write_csv(&mut self, name: &str, body: Vec<u8>, columns: &[(String, String)]) -> Result<(), CliError> {
        self.write(name, &body)?;
        let desc: String = columns.iter().map(|(c, d)| format!("{c}: {d}\n")).collect();
        let stem = name.trim_end_matches(".csv");
        self.write(&format!("{stem}.columns.txt"), desc.as_bytes())
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: self.command,
            tool_version: lyapunov_lab::VERSION_TAG.into(),
            rng_version: lyapunov_lab::rng::RNG_VERSION.into(),
            config: self.config,
            arguments: self.arguments,
            started_unix_seconds: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            exclusions: self.exclusions,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?;
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

/// Checks every digest listed in `manifest` against the files in `dir`.
pub fn check_digests(manifest: &RunManifest, dir: &Path) -> Result<(), String> {
    for o in &manifest.outputs {
        let bytes = std::fs::read(dir.join(&o.file)).map_err(|e| format!("{}: {e}", o.file))?;
        if sha256_hex(&bytes) != o.sha256 {
            return Err(format!("{}: digest mismatch", o.file));
        }
    }
    Ok(())
}
