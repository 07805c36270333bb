//! Optional JSON configuration named by `PREVFUSE_CONFIG`.
//!
//! Keys mirror the long flag names with `-` replaced by `_`. Flags given on
//! the command line take precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

pub const CONFIG_ENV: &str = "PREVFUSE_CONFIG";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub prevalence: Option<PathBuf>,
    pub modes: Option<String>,
    pub agg: Option<String>,
    pub out: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub indicators: Option<String>,
    pub observations: Option<PathBuf>,
    pub subject: Option<String>,
    pub tau: Option<f64>,
    pub fever_threshold: Option<f64>,
    pub threshold: Option<f64>,
    pub log: Option<PathBuf>,
    pub rounding: Option<String>,
    pub dataset: Option<PathBuf>,
    pub format: Option<String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Loads the file named by `PREVFUSE_CONFIG`, or an empty config.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) if !path.is_empty() => Config::load(Path::new(&path)),
            _ => Ok(Config::default()),
        }
    }
}
