//! Experiment configuration: a single TOML file with every knob, each one
//! overridable from the command line. Validation failures carry the field
//! path and map to exit code 2.

use std::fmt;
use std::path::{Path, PathBuf};

use collapse_core::apparatus::ApparatusParams;
use collapse_core::state::AmplitudeVector;
use serde::{Deserialize, Serialize};

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "COLLAPSE_OUT_DIR";

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Uniform,
    General,
}

impl Default for ModelKind {
    fn default() -> Self {
        ModelKind::Uniform
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WalkOptions {
    /// Record (x, p, entropy) along every walk and export trajectories.csv.
    #[serde(default)]
    pub record_trajectories: bool,
    /// Export this many uniform noise realizations for audit.
    #[serde(default)]
    pub export_noise: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerOptions {
    /// Bins per z axis of the exported histogram.
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_bins() -> usize {
    21
}

impl Default for PointerOptions {
    fn default() -> Self {
        Self {
            bins: default_bins(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinksOptions {
    /// Source strength |J0|.
    #[serde(default = "default_source")]
    pub source: f64,
    /// Real parts of the sink efficiencies; defaults to all ones.
    #[serde(default)]
    pub sinks_re: Option<Vec<f64>>,
    /// Imaginary parts; defaults to all zeros.
    #[serde(default)]
    pub sinks_im: Option<Vec<f64>>,
}

fn default_source() -> f64 {
    1.0e3
}

impl Default for SinksOptions {
    fn default() -> Self {
        Self {
            source: default_source(),
            sinks_re: None,
            sinks_im: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GedankenOptions {
    /// Dimensionless field strength alpha |B| in [0, 1).
    #[serde(default)]
    pub alpha_b: f64,
    /// Field sign ±1; omit to average over an unbiased sign.
    #[serde(default)]
    pub epsilon: Option<i8>,
}

/// Full experiment description. Field names are the TOML schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of: walk, ensemble, pointer, sinks, gedanken, verify.
    pub experiment: String,
    #[serde(default)]
    pub model: ModelKind,
    /// Channel count; defaults to the length of `psi_squared`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Even step count 2X.
    #[serde(default)]
    pub two_x: Option<usize>,
    /// Shared coupling strength of the uniform model.
    #[serde(default)]
    pub eta: Option<f64>,
    /// CSV matrix (n rows, 2X columns) of per-site couplings; general model.
    #[serde(default)]
    pub eta_file: Option<PathBuf>,
    /// CSV matrix of per-site gauge factors; defaults to all ones.
    #[serde(default)]
    pub c_file: Option<PathBuf>,
    /// Channel weights |psi_j|^2; must sum to 1 within 1e-9.
    #[serde(default)]
    pub psi_squared: Vec<f64>,
    /// Optional amplitude phases (radians); defaults to real positive roots.
    #[serde(default)]
    pub psi_phases: Option<Vec<f64>>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; falls back to $COLLAPSE_OUT_DIR, then ./out.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub walk: WalkOptions,
    #[serde(default)]
    pub pointer: PointerOptions,
    #[serde(default)]
    pub sinks: SinksOptions,
    #[serde(default)]
    pub gedanken: GedankenOptions,
}

fn default_runs() -> u64 {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            model: ModelKind::Uniform,
            n: None,
            two_x: None,
            eta: None,
            eta_file: None,
            c_file: None,
            psi_squared: Vec::new(),
            psi_phases: None,
            runs: default_runs(),
            seed: 0,
            outputs: None,
            walk: WalkOptions::default(),
            pointer: PointerOptions::default(),
            sinks: SinksOptions::default(),
            gedanken: GedankenOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("config", format!("cannot read {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::new("config", e.to_string()))
    }

    /// Channel count, from `n` or the weight vector.
    pub fn channels(&self) -> usize {
        self.n.unwrap_or(self.psi_squared.len())
    }

    /// Resolved output directory.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(dir) = &self.outputs {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from("out")
    }

    /// Structural validation with field paths. Experiment-specific needs
    /// (eta, step counts, weight vector length) are checked per experiment.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let known = ["walk", "ensemble", "pointer", "sinks", "gedanken", "verify"];
        if !known.contains(&self.experiment.as_str()) {
            return Err(ConfigError::new(
                "experiment",
                format!(
                    "unknown experiment `{}`; expected one of {}",
                    self.experiment,
                    known.join(", ")
                ),
            ));
        }
        if self.runs < 1 {
            return Err(ConfigError::new("runs", "must be at least 1"));
        }
        let needs_state = matches!(
            self.experiment.as_str(),
            "walk" | "ensemble" | "pointer" | "sinks" | "gedanken"
        );
        if needs_state {
            self.validate_weights()?;
        }
        let needs_apparatus = matches!(self.experiment.as_str(), "walk" | "ensemble" | "pointer");
        if needs_apparatus {
            if self.model != ModelKind::Uniform {
                return Err(ConfigError::new(
                    "model",
                    format!(
                        "experiment `{}` runs on the uniform model; the general model is exercised through `verify`",
                        self.experiment
                    ),
                ));
            }
            self.validate_uniform_apparatus()?;
        }
        if self.experiment == "gedanken" {
            if self.psi_squared.len() != 3 {
                return Err(ConfigError::new(
                    "psi_squared",
                    "gedanken needs exactly three components (minus, zero, plus)",
                ));
            }
            if !(0.0..1.0).contains(&self.gedanken.alpha_b) {
                return Err(ConfigError::new(
                    "gedanken.alpha_b",
                    "must lie in [0, 1)",
                ));
            }
            if let Some(eps) = self.gedanken.epsilon {
                if eps != 1 && eps != -1 {
                    return Err(ConfigError::new("gedanken.epsilon", "must be 1 or -1"));
                }
            }
        }
        if self.experiment == "pointer" {
            if self.pointer.bins < 3 {
                return Err(ConfigError::new("pointer.bins", "need at least 3 bins"));
            }
            if self.channels() > 3 {
                return Err(ConfigError::new(
                    "n",
                    "pointer histograms support at most 3 channels",
                ));
            }
        }
        if self.experiment == "ensemble" && self.channels() > 3 {
            return Err(ConfigError::new(
                "n",
                "ensemble histograms support at most 3 channels",
            ));
        }
        if self.experiment == "sinks" {
            self.validate_sinks()?;
        }
        Ok(())
    }

    fn validate_weights(&self) -> Result<(), ConfigError> {
        if self.psi_squared.is_empty() {
            return Err(ConfigError::new("psi_squared", "missing channel weights"));
        }
        if let Some(n) = self.n {
            if n != self.psi_squared.len() {
                return Err(ConfigError::new(
                    "n",
                    format!("n = {n} but psi_squared has {} entries", self.psi_squared.len()),
                ));
            }
        }
        if self.psi_squared.iter().any(|&w| !(w >= 0.0)) {
            return Err(ConfigError::new(
                "psi_squared",
                "weights must be nonnegative",
            ));
        }
        let total: f64 = self.psi_squared.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ConfigError::new(
                "psi_squared",
                format!("weights sum to {total}, must be 1 within 1e-9"),
            ));
        }
        if let Some(phases) = &self.psi_phases {
            if phases.len() != self.psi_squared.len() {
                return Err(ConfigError::new(
                    "psi_phases",
                    "must match psi_squared in length",
                ));
            }
        }
        Ok(())
    }

    fn validate_uniform_apparatus(&self) -> Result<(), ConfigError> {
        let two_x = self
            .two_x
            .ok_or_else(|| ConfigError::new("two_x", "missing step count"))?;
        if two_x < 2 || two_x % 2 != 0 {
            return Err(ConfigError::new(
                "two_x",
                "must be even and at least 2",
            ));
        }
        let eta = self
            .eta
            .ok_or_else(|| ConfigError::new("eta", "missing coupling strength"))?;
        if !(eta > 0.0 && eta < 0.5) {
            return Err(ConfigError::new(
                "eta",
                "must lie strictly between 0 and 1/2",
            ));
        }
        Ok(())
    }

    fn validate_sinks(&self) -> Result<(), ConfigError> {
        if !(self.sinks.source >= 0.0) {
            return Err(ConfigError::new("sinks.source", "must be nonnegative"));
        }
        let n = self.channels();
        if let Some(re) = &self.sinks.sinks_re {
            if re.len() != n {
                return Err(ConfigError::new(
                    "sinks.sinks_re",
                    format!("expected {n} entries"),
                ));
            }
        }
        if let Some(im) = &self.sinks.sinks_im {
            if im.len() != n {
                return Err(ConfigError::new(
                    "sinks.sinks_im",
                    format!("expected {n} entries"),
                ));
            }
        }
        Ok(())
    }

    /// Builds the validated amplitude vector.
    pub fn amplitude_vector(&self) -> Result<AmplitudeVector, ConfigError> {
        let result = match &self.psi_phases {
            Some(phases) => {
                AmplitudeVector::from_probabilities_with_phases(&self.psi_squared, phases)
            }
            None => AmplitudeVector::from_probabilities(&self.psi_squared),
        };
        result.map_err(|e| ConfigError::new("psi_squared", e.to_string()))
    }

    /// Builds the apparatus for this run (uniform, or general from the
    /// matrix files).
    pub fn apparatus(&self) -> Result<ApparatusParams, ConfigError> {
        let n = self.channels();
        let two_x = self
            .two_x
            .ok_or_else(|| ConfigError::new("two_x", "missing step count"))?;
        match self.model {
            ModelKind::Uniform => {
                let eta = self
                    .eta
                    .ok_or_else(|| ConfigError::new("eta", "missing coupling strength"))?;
                ApparatusParams::uniform(n, two_x, eta, self.seed)
                    .map_err(|e| ConfigError::new("eta", e.to_string()))
            }
            ModelKind::General => {
                let eta_file = self.eta_file.as_ref().ok_or_else(|| {
                    ConfigError::new("eta_file", "general model needs a coupling matrix file")
                })?;
                let eta = read_matrix(eta_file, n, two_x, "eta_file")?;
                let c = match &self.c_file {
                    Some(path) => read_matrix(path, n, two_x, "c_file")?,
                    None => vec![1.0; n * two_x],
                };
                ApparatusParams::general(n, two_x, eta, c, self.seed)
                    .map_err(|e| ConfigError::new("eta_file", e.to_string()))
            }
        }
    }
}

/// Reads an `n x two_x` CSV matrix of floats (one row per channel).
fn read_matrix(
    path: &Path,
    n: usize,
    two_x: usize,
    field: &str,
) -> Result<Vec<f64>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(field, format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(n * two_x);
    let mut rows = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        rows += 1;
        let mut cols = 0usize;
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|e| {
                ConfigError::new(field, format!("line {}: {e}", line_no + 1))
            })?;
            values.push(v);
            cols += 1;
        }
        if cols != two_x {
            return Err(ConfigError::new(
                field,
                format!("line {}: expected {two_x} columns, got {cols}", line_no + 1),
            ));
        }
    }
    if rows != n {
        return Err(ConfigError::new(
            field,
            format!("expected {n} rows, got {rows}"),
        ));
    }
    Ok(values)
}
