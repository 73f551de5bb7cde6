use std::path::{Path, PathBuf};
use std::time::Duration;

use ots_solver::MipConfig;
use serde::Deserialize;

use super::BenchError;
use crate::grid::{parse_matpower_case, parse_native, parse_sidecar, Network};
use crate::knn::Method;

/// An experiment description read from TOML.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: PathBuf,
    /// Annotation file for case-format networks.
    #[serde(default)]
    pub sidecar: Option<PathBuf>,
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    pub methods: Vec<String>,
    #[serde(default)]
    pub k_grid: Vec<usize>,
    #[serde(default = "default_gap")]
    pub gap_tolerance: f64,
    /// Seconds per MIP solve.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub exclude_time_limited: bool,
}

fn default_perturbation() -> f64 {
    0.10
}

fn default_gap() -> f64 {
    1e-4
}

fn default_time_limit() -> f64 {
    3600.0
}

fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.methods()?;
        if cfg.instances == 0 {
            return Err(BenchError::Invalid("instances must be at least 1".into()));
        }
        if !(cfg.gap_tolerance > 0.0) || !(cfg.time_limit > 0.0) {
            return Err(BenchError::Invalid("gap tolerance and time limit must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn methods(&self) -> Result<Vec<Method>, BenchError> {
        self.methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(|e| BenchError::Invalid(e.to_string())))
            .collect()
    }

    pub fn mip_config(&self) -> MipConfig {
        MipConfig {
            gap_tolerance: self.gap_tolerance,
            time_limit: Duration::from_secs_f64(self.time_limit),
            seed: self.seed,
            ..MipConfig::default()
        }
    }
}

/// Reads a network file. Files ending in `.m` are case files and need a
/// sidecar, by default the same path with extension `switch`.
pub fn load_network(path: &Path, sidecar: Option<&Path>) -> Result<Network, BenchError> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "m") {
        let side_path = sidecar.map_or_else(|| path.with_extension("switch"), Path::to_path_buf);
        let side = std::fs::read_to_string(&side_path).map_err(|e| {
            BenchError::Invalid(format!("cannot read sidecar {}: {e}", side_path.display()))
        })?;
        Ok(parse_matpower_case(&text, &parse_sidecar(&side)?)?)
    } else {
        Ok(parse_native(&text)?)
    }
}
