//! Run manifest: everything needed to regenerate a run's outputs — the
//! resolved configuration, the code version, and the per-experiment summary
//! statistics — plus the wall time for bookkeeping.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    /// Files written by the run, relative to the output directory.
    pub data_files: Vec<String>,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn new(
        config: &ExperimentConfig,
        wall_time_seconds: f64,
        data_files: Vec<String>,
        summary: serde_json::Value,
    ) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.clone(),
            config: config.clone(),
            wall_time_seconds,
            data_files,
            summary,
        }
    }
}
