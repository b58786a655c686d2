//! Run configuration files and their validation.
//!
//! A config is `{"schema_version": 1, "experiment": ..., "seed": ...,
//! "output_path": ..., "output_format": ..., "defaults": {...},
//! "parameters": {...}}`; everything except `schema_version` is optional.
//! `parameters` is checked against the experiment's own schema before any
//! computation starts.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use protomeas::defaults::PhysicalDefaults;
use protomeas::dynamics::Envelope;
use protomeas::io::{ComponentSpec, StateSpec};
use protomeas::mixtures::DrawMode;
use protomeas::tomography::Tomogram;
use protomeas::{DensityMatrix, Operator};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming a JSON file that replaces the built-in
/// physical defaults table.
pub const DEFAULTS_ENV: &str = "PROTOMEAS_DEFAULTS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Protective,
    Tomography,
    Entropy,
    Ensemble,
    BeamMerge,
    ErrorScaling,
    Frequency,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Protective => "protective",
            Experiment::Tomography => "tomography",
            Experiment::Entropy => "entropy",
            Experiment::Ensemble => "ensemble",
            Experiment::BeamMerge => "beam-merge",
            Experiment::ErrorScaling => "error-scaling",
            Experiment::Frequency => "frequency",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub output_format: Option<Format>,
    /// Partial override of the physical defaults table.
    #[serde(default)]
    pub defaults: Option<Map<String, Value>>,
    #[serde(default)]
    pub parameters: Option<Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: None,
            seed: None,
            output_path: None,
            output_format: None,
            defaults: None,
            parameters: None,
        }
    }
}

/// Deserializes `value`, reporting the offending field as a dotted path
/// under `prefix`.
pub fn parse_at<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut path = prefix.to_string();
        let inner = e.path().to_string();
        if inner != "." {
            if !path.is_empty() {
                path.push('.');
            }
            path.push_str(&inner);
        }
        let message = e.inner().to_string();
        // name the missing field itself rather than its parent
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|m| m.split('`').next())
        {
            if !path.is_empty() {
                path.push('.');
            }
            path.push_str(field);
        }
        CliError::Validation(format!("{path}: {message}"))
    })
}

pub fn parse_config_text(text: &str) -> Result<RunConfig, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
    let config: RunConfig = parse_at("", value)?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(CliError::Validation(format!(
            "schema_version: expected {SCHEMA_VERSION}, found {}",
            config.schema_version
        )));
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Built-in table, replaced by the file named in `PROTOMEAS_DEFAULTS` when
/// set, then patched field by field from the config's `defaults`.
pub fn resolve_defaults(
    overrides: Option<&Map<String, Value>>,
) -> Result<PhysicalDefaults, CliError> {
    let base = match std::env::var_os(DEFAULTS_ENV) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                CliError::Validation(format!(
                    "{DEFAULTS_ENV}={}: {e}",
                    Path::new(&path).display()
                ))
            })?;
            let value: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Validation(format!("{DEFAULTS_ENV}: not valid JSON: {e}"))
            })?;
            parse_at::<PhysicalDefaults>("defaults", value)?
        }
        None => PhysicalDefaults::default(),
    };
    let Some(overrides) = overrides else {
        return Ok(base);
    };
    let mut merged = match serde_json::to_value(base) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("defaults serialize to an object"),
    };
    for (k, v) in overrides {
        merged.insert(k.clone(), v.clone());
    }
    let d: PhysicalDefaults = parse_at("defaults", Value::Object(merged))?;
    validate_defaults(&d)?;
    Ok(d)
}

fn validate_defaults(d: &PhysicalDefaults) -> Result<(), CliError> {
    let positive = [
        ("gap", d.gap),
        ("time_factor", d.time_factor),
        ("grid_half_width", d.grid_half_width),
        ("pointer_width", d.pointer_width),
        ("pointer_mass", d.pointer_mass),
        ("steps_per_unit", d.steps_per_unit),
    ];
    for (name, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Validation(format!(
                "defaults.{name}: must be positive, got {v}"
            )));
        }
    }
    if d.max_dim == 0 {
        return Err(CliError::Validation(
            "defaults.max_dim: must be positive".into(),
        ));
    }
    Ok(())
}

/// How the protection Hamiltonian is specified.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Protection {
    /// Explicit Hermitian matrix; the protected state defaults to its ground
    /// state.
    Hamiltonian(Operator),
    /// −gap·|ψ⟩⟨ψ| built around `state`; gap defaults to the table value.
    Projector {
        #[serde(default)]
        gap: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    #[serde(rename = "T")]
    pub total_time: f64,
    /// Step count; the default step rule applies when absent.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub envelope: Option<Envelope>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    #[default]
    Mean,
    SingleShot,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectiveParams {
    pub protection: Protection,
    #[serde(default)]
    pub state: Option<StateSpec>,
    /// Observable; on the first factor when `subsystem_dims` is given.
    pub observable: Operator,
    #[serde(default)]
    pub subsystem_dims: Option<[usize; 2]>,
    pub schedule: ScheduleParams,
    #[serde(default)]
    pub readout: ReadoutMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorScalingParams {
    pub protection: Protection,
    #[serde(default)]
    pub state: Option<StateSpec>,
    pub observable: Operator,
    #[serde(default)]
    pub subsystem_dims: Option<[usize; 2]>,
    /// Durations in units of 1/ΔE; exclusive with `T_values`.
    #[serde(default, rename = "T_factors")]
    pub t_factors: Option<Vec<f64>>,
    #[serde(default, rename = "T_values")]
    pub t_values: Option<Vec<f64>>,
    #[serde(default)]
    pub envelope: Option<Envelope>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TomographyParams {
    /// Exact expectation values of `rho`, optionally with Gaussian noise.
    Exact {
        rho: DensityMatrix,
        #[serde(default)]
        noise_sigma: f64,
        #[serde(default)]
        residual_bound: Option<f64>,
    },
    /// A recorded tomogram.
    Tomogram {
        tomogram: Tomogram,
        #[serde(default)]
        residual_bound: Option<f64>,
    },
    /// Protective estimates of every basis observable on `state`, or on the
    /// first factor of `state` when `subsystem_dims` is given.
    Protective {
        state: StateSpec,
        #[serde(default)]
        subsystem_dims: Option<[usize; 2]>,
        #[serde(default)]
        residual_bound: Option<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntropyParams {
    State {
        rho: DensityMatrix,
        #[serde(default)]
        unitary: Option<Operator>,
    },
    /// Subsystem-1 entropy of a product state under H(t) = static + g(t)·coupling.
    Growth {
        #[serde(rename = "static")]
        static_part: Operator,
        #[serde(default)]
        coupling: Option<Operator>,
        dims: [usize; 2],
        state: StateSpec,
        schedule: ScheduleParams,
        /// Sample times; 21 evenly spaced points on [0, T] when absent.
        #[serde(default)]
        times: Option<Vec<f64>>,
    },
}

fn default_n() -> u64 {
    100
}

fn default_trials() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawParams {
    pub n: usize,
    pub mode: DrawMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleParams {
    #[serde(rename = "N", default = "default_n")]
    pub n: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub keep_trials: bool,
    /// Optional custom collection analysed next to the two preparations.
    #[serde(default)]
    pub components: Option<Vec<ComponentSpec>>,
    /// Draws from the custom collection.
    #[serde(default)]
    pub draw: Option<DrawParams>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamMergeParams {}

fn default_weights() -> Vec<f64> {
    vec![0.5, 0.5]
}

fn default_ladder() -> Vec<u64> {
    vec![6, 60, 600, 6000]
}

fn default_draws() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyParams {
    #[serde(default = "default_weights")]
    pub weights: Vec<f64>,
    #[serde(rename = "N_ladder", default = "default_ladder")]
    pub n_ladder: Vec<u64>,
    #[serde(default = "default_draws")]
    pub n_draws: usize,
    #[serde(default)]
    pub mc_trials: usize,
}
