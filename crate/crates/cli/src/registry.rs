//! Experiment registry: each runnable experiment implements [`Experiment`]
//! and is registered by name; the CLI resolves the configured name at
//! runtime. Adding an experiment means adding one impl and one
//! registration line.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;

use crate::config::{ConfigError, ExperimentConfig};
use crate::export::CsvFile;
use crate::manifest::RunManifest;

/// Shared state handed to a running experiment.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    data_files: Vec<String>,
}

impl RunContext {
    pub fn new(config: ExperimentConfig) -> Result<Self, ConfigError> {
        let out_dir = config.output_dir();
        std::fs::create_dir_all(&out_dir).map_err(|e| {
            ConfigError::new(
                "outputs",
                format!("cannot create {}: {e}", out_dir.display()),
            )
        })?;
        Ok(Self {
            config,
            out_dir,
            data_files: Vec::new(),
        })
    }

    pub fn csv(&mut self, name: &str, header: &str) -> Result<CsvFile> {
        self.data_files.push(name.to_string());
        CsvFile::create(&self.out_dir, name, header)
    }

    pub fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        self.data_files.push(name.to_string());
        crate::export::write_json(&self.out_dir, name, value)?;
        Ok(())
    }

    pub fn record_file(&mut self, name: &str) {
        self.data_files.push(name.to_string());
    }
}

/// One runnable experiment. `run` returns the machine-readable summary that
/// goes into the manifest; a summary field `"passed": false` signals an
/// invariant failure (exit code 1).
pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &mut RunContext) -> Result<serde_json::Value>;
}

pub struct ExperimentRegistry {
    experiments: Vec<Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self {
            experiments: Vec::new(),
        }
    }

    /// Registry with every built-in experiment.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register(Box::new(crate::experiments::walk::WalkExperiment));
        registry.register(Box::new(crate::experiments::ensemble::EnsembleExperiment));
        registry.register(Box::new(crate::experiments::pointer::PointerExperiment));
        registry.register(Box::new(crate::experiments::sinks::SinksExperiment));
        registry.register(Box::new(crate::experiments::gedanken::GedankenExperiment));
        registry.register(Box::new(crate::experiments::verify::VerifyExperiment));
        registry
    }

    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        debug_assert!(
            self.get(experiment.name()).is_none(),
            "duplicate experiment name {}",
            experiment.name()
        );
        self.experiments.push(experiment);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.experiments
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.experiments.iter().map(|e| e.name()).collect()
    }

    /// Validates the config, dispatches to the named experiment, and writes
    /// the manifest. Returns the manifest for exit-code inspection.
    pub fn run(&self, config: ExperimentConfig) -> Result<RunManifest> {
        config.validate()?;
        let experiment = self
            .get(&config.experiment)
            .ok_or_else(|| ConfigError::new("experiment", "no such experiment registered"))?;
        let mut ctx = RunContext::new(config)?;
        let start = Instant::now();
        let summary = experiment.run(&mut ctx)?;
        let manifest = RunManifest::new(
            &ctx.config,
            start.elapsed().as_secs_f64(),
            ctx.data_files.clone(),
            summary,
        );
        crate::export::write_json(&ctx.out_dir, "manifest.json", &serde_json::to_value(&manifest)?)?;
        Ok(manifest)
    }
}
