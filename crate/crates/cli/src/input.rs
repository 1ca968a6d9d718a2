//! Configuration files and run manifests.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use photoclone::engine::{ExperimentConfig, Integrator};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Record written next to every set of result files. Feeding it back through
/// `--config` replays the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn start(command: &str, config: &ExperimentConfig) -> Self {
        let seed = match config.integrator {
            Integrator::MonteCarlo { seed, .. } => Some(seed),
            Integrator::GaussHermite { .. } => None,
        };
        Self {
            tool: "photoclone".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            seed,
            started_unix_ms: unix_ms(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(mut self, out_dir: &Path, outputs: Vec<PathBuf>) -> Result<PathBuf, Failure> {
        let path = out_dir.join("manifest.json");
        self.outputs = outputs;
        self.finished_unix_ms = unix_ms();
        let text = serde_json::to_string_pretty(&self).map_err(|e| Failure::runtime(e.into()))?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::runtime)?;
        Ok(path)
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Loads an experiment configuration from TOML, JSON, or a run manifest.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::runtime)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        parse_json(&text)
    } else {
        toml::from_str::<ExperimentConfig>(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|msg| Failure::validation(anyhow::anyhow!("{}: {msg}", path.display())))
}

fn parse_json(text: &str) -> Result<ExperimentConfig, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    // a manifest wraps the resolved configuration
    let inner = match value.get("config") {
        Some(cfg) if value.get("tool").is_some() => cfg.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| e.to_string())
}

/// Applies the `--seed` and `--workers` overrides.
pub fn apply_overrides(
    mut config: ExperimentConfig,
    seed: Option<u64>,
    workers: Option<usize>,
) -> ExperimentConfig {
    if let Some(s) = seed {
        if matches!(config.integrator, Integrator::GaussHermite { .. }) {
            eprintln!("warning: --seed has no effect on a quadrature run");
        }
        config = config.with_seed(s);
    }
    if let Some(w) = workers {
        config = config.with_workers(w);
    }
    config
}
