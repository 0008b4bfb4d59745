//! Experiment configuration: an optional JSON file overlaid by flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WORMALD_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

/// Every field is optional; unset fields fall back to per-subcommand
/// defaults. Unknown keys in a config file are an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    /// Fields set in `self` win over `base`.
    pub fn overlay(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            n: self.n.or(base.n),
            runs: self.runs.or(base.runs),
            seed: self.seed.or(base.seed),
            l: self.l.or(base.l),
            s_max: self.s_max.or(base.s_max),
            h: self.h.or(base.h),
            grid_stride: self.grid_stride.or(base.grid_stride),
            cs: self.cs.or(base.cs),
            trials: self.trials.or(base.trials),
            ns: self.ns.or(base.ns),
            state_samples: self.state_samples.or(base.state_samples),
            out: self.out.or(base.out),
        }
    }

    /// `out`, else `$WORMALD_OUT_DIR`, else the working directory.
    pub fn output_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
