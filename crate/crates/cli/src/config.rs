//! Experiment documents, schema `lyapunov-lab-config/1`.

use crate::error::CliError;
use lyapunov_lab::estimators::{GleOptions, LeOptions};
use lyapunov_lab::evolution::SchemeKind;
use lyapunov_lab::processes::ProcessSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA: &str = "lyapunov-lab-config/1";
pub const MANIFEST_SCHEMA: &str = "lyapunov-lab-manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub process: ProcessSpec,
    #[serde(default)]
    pub scheme: SchemeKind,
    /// What the GLE is taken of.
    #[serde(default)]
    pub source: GleSource,
    pub dt: f64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(rename = "T_list", default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
    pub n_realizations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_grid: Option<EtaGridSpec>,
    #[serde(default)]
    pub le: LeOptions,
    #[serde(default)]
    pub gle: GleOptions,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub workers: Workers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GleSource {
    /// `log D` of the evolution matrix.
    #[default]
    Matrix,
    /// Time integrals of the diagonal noise entries, no evolution.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaGridSpec {
    Points(Vec<Vec<f64>>),
    /// Cross product of per-component axes.
    Product(Vec<Vec<f64>>),
}

impl EtaGridSpec {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Points(p) => p.clone(),
            Self::Product(axes) => {
                let mut out: Vec<Vec<f64>> = vec![Vec::new()];
                for axis in axes {
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            axis.iter().map(move |v| {
                                let mut p = prefix.clone();
                                p.push(*v);
                                p
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

/// A worker count, or `"auto"` for one per core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    #[default]
    Auto,
    Count(usize),
}

impl Serialize for Workers {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Workers {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Self::Count(n)),
            Raw::Name(s) if s == "auto" => Ok(Self::Auto),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("expected \"auto\" or a count, got {s:?}"))),
        }
    }
}

impl Workers {
    pub fn get(self) -> Option<usize> {
        match self {
            Self::Auto => None,
            Self::Count(n) => Some(n),
        }
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ExperimentConfig {
    /// Parses a config document, or the config echoed inside a manifest.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config("", e.to_string()))?;
        let text = match value.get("schema").and_then(|s| s.as_str()) {
            Some(MANIFEST_SCHEMA) => match value.get("config") {
                Some(c) => c.to_string(),
                None => return Err(CliError::config("config", "manifest carries no config")),
            },
            _ => text.to_string(),
        };
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(&path, e.into_inner().to_string())
        })?;
        reject_unknown_process_keys(&text, &cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config("", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.process.master_seed = seed;
        }
        if let Some(w) = o.workers {
            self.workers = Workers::Count(w);
        }
        if let Some(dir) = &o.output_dir {
            self.outputs.dir = dir.clone();
        }
        if let Some(f) = o.format {
            self.outputs.formats = vec![f];
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(CliError::config("schema", format!("expected {CONFIG_SCHEMA:?}, got {:?}", self.schema)));
        }
        self.process.validate().map_err(|e| CliError::config("process", e.to_string()))?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CliError::config("dt", "must be positive and finite"));
        }
        if self.n_realizations == 0 {
            return Err(CliError::config("n_realizations", "must be at least 1"));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0) {
                return Err(CliError::config("T", "must be positive"));
            }
        }
        if let Some(ts) = &self.horizons {
            if ts.is_empty() || ts.windows(2).any(|w| !(w[1] > w[0])) || !(ts[0] > 0.0) {
                return Err(CliError::config("T_list", "must be positive and strictly increasing"));
            }
        }
        if let Some(grid) = &self.eta_grid {
            let d = self.process.dim();
            let points = grid.points();
            if points.is_empty() {
                return Err(CliError::config("eta_grid", "is empty"));
            }
            if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != d) {
                return Err(CliError::config(
                    &format!("eta_grid[{i}]"),
                    format!("has {} components, the process has dimension {d}", p.len()),
                ));
            }
        }
        if self.workers == Workers::Count(0) {
            return Err(CliError::config("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// `T`, falling back to the last entry of `T_list`.
    pub fn le_horizon(&self) -> Result<f64, CliError> {
        self.horizon
            .or_else(|| self.horizons.as_ref().and_then(|t| t.last().copied()))
            .ok_or_else(|| CliError::config("T", "required for LE runs"))
    }

    pub fn gle_horizons(&self) -> Result<Vec<f64>, CliError> {
        self.horizons
            .clone()
            .or_else(|| self.horizon.map(|t| vec![t]))
            .ok_or_else(|| CliError::config("T_list", "required for GLE runs"))
    }

    /// The configured grid, or the axes `η_k ∈ {-1, 0, 1}` one at a time.
    pub fn eta_points(&self) -> Vec<Vec<f64>> {
        match &self.eta_grid {
            Some(g) => g.points(),
            None => {
                let d = self.process.dim();
                let mut pts = vec![vec![0.0; d]];
                for k in 0..d {
                    for s in [1.0, -1.0] {
                        let mut p = vec![0.0; d];
                        p[k] = s;
                        pts.push(p);
                    }
                }
                pts
            }
        }
    }
}

/// `process` flattens its kind, which serde cannot combine with
/// `deny_unknown_fields`; compare against what the parsed value writes back.
fn reject_unknown_process_keys(text: &str, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config("", e.to_string()))?;
    let known = serde_json::to_value(&cfg.process).map_err(|e| CliError::config("process", e.to_string()))?;
    if let (Some(raw), Some(known)) = (raw.get("process").and_then(|p| p.as_object()), known.as_object()) {
        if let Some(k) = raw.keys().find(|k| !known.contains_key(*k)) {
            return Err(CliError::config(&format!("process.{k}"), "unknown field"));
        }
    }
    Ok(())
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// Presets shipped as documents.
        pub const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../presets/", $name, ".json")))),*
        ];
    };
}

presets!(
    "gaussian-d3-traceless",
    "null-noise",
    "constant-diag",
    "scalar-ou-gle",
    "telegraph-gle",
    "gaussian-d2-gle",
    "modulated-d2-shift",
);

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::config("preset", format!("unknown preset {name:?}; available: {}", names.join(", ")))
    })?;
    ExperimentConfig::from_json(text)
}
