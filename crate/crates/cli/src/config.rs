//! Run configuration, its validation and the error kinds that map to exit codes.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use quepp_core::backend::DEFAULT_TRAJECTORY_QUBITS;
use quepp_core::pipeline::EnsembleSource;
use quepp_core::{
    rng, Circuit, EtaMethod, ExecutionPlan, ExperimentSpec, NoiseModel, PauliString,
    SimulatorBackend, TruncationPolicy,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Invalid input; exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A self-check on computed results failed; exit code 4.
#[derive(Debug)]
pub struct InternalError(pub String);

impl fmt::Display for InternalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "internal assertion failed: {}", self.0)
    }
}

impl std::error::Error for InternalError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Settings of the purely classical `cpt` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CptSettings {
    /// Highest order in the order series.
    pub max_order: usize,
    /// Largest term budget in the merged-propagation series.
    pub max_terms: usize,
    /// Coefficient threshold for merged propagation.
    pub epsilon: f64,
}

impl Default for CptSettings {
    fn default() -> Self {
        CptSettings {
            max_order: 4,
            max_terms: 1 << 20,
            epsilon: 0.0,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub experiment: ExperimentSpec,
    #[serde(default = "default_ensemble")]
    pub ensemble: EnsembleSource,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default = "default_plan")]
    pub plan: ExecutionPlan,
    #[serde(default)]
    pub eta_method: EtaMethod,
    /// Master seed for sampling and execution; the circuit seed lives in `experiment`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub allow_partial: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub cpt: CptSettings,
    #[serde(default = "trajectory_cap")]
    pub trajectory_qubit_cap: usize,
    /// Largest register for the dense statevector oracle column.
    #[serde(default = "oracle_cap")]
    pub oracle_max_qubits: usize,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_ensemble() -> EnsembleSource {
    EnsembleSource::order(3)
}
fn default_plan() -> ExecutionPlan {
    ExecutionPlan::new(100, 200, 0)
}
fn one() -> usize {
    1
}
fn trajectory_cap() -> usize {
    DEFAULT_TRAJECTORY_QUBITS
}
fn oracle_cap() -> usize {
    20
}

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub allow_partial: bool,
    pub infinite_shots: bool,
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a result file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        if let Some(embedded) = value.get_mut("config") {
            value = embedded.take();
        }
        serde_json::from_value(value).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    /// Applies overrides and propagates the master seed and worker count.
    pub fn resolve(mut self, o: &Overrides) -> Result<RunConfig> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if o.out.is_some() {
            self.output_dir = o.out.clone();
        }
        self.allow_partial |= o.allow_partial;
        self.plan.infinite_shots |= o.infinite_shots;
        self.plan.seed = rng::derive_seed(self.seed, &[0x706c_616e]);
        if let EnsembleSource::Sampler { config } = &mut self.ensemble {
            // The stream count stays as configured: it changes which paths are drawn.
            config.seed = rng::derive_seed(self.seed, &[0x7361_6d70]);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_error(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.workers == 0 {
            return Err(config_error("workers must be at least 1"));
        }
        self.plan
            .validate()
            .map_err(|e| config_error(e.to_string()))?;
        self.noise
            .compile()
            .map_err(|e| config_error(e.to_string()))?;
        match &self.ensemble {
            EnsembleSource::Truncation { policy } => {
                policy.validate().map_err(|e| config_error(e.to_string()))?
            }
            EnsembleSource::Sampler { config } => {
                config.validate().map_err(|e| config_error(e.to_string()))?
            }
        }
        self.observable()?;
        self.circuit_at(self.experiment.theta)?;
        Ok(())
    }

    pub fn observable(&self) -> Result<PauliString> {
        self.experiment
            .observable()
            .map_err(|e| config_error(e.to_string()))
    }

    pub fn circuit_at(&self, theta: f64) -> Result<Circuit> {
        self.experiment
            .generate_at(theta)
            .map_err(|e| config_error(e.to_string()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os("QUEPP_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("quepp-out"))
    }

    pub fn backend(&self) -> Result<SimulatorBackend> {
        Ok(SimulatorBackend::new(self.noise.clone())
            .map_err(|e| config_error(e.to_string()))?
            .with_workers(self.workers)
            .with_trajectory_cap(self.trajectory_qubit_cap))
    }

    /// Execution plan for the `index`-th sweep point.
    pub fn plan_for(&self, index: usize) -> ExecutionPlan {
        ExecutionPlan {
            seed: rng::derive_seed(self.plan.seed, &[index as u64]),
            ..self.plan.clone()
        }
    }

    /// Truncation order of the ensemble, when it is order-based.
    pub fn order(&self) -> Option<usize> {
        match self.ensemble {
            EnsembleSource::Truncation {
                policy: TruncationPolicy::Order { k_t } | TruncationPolicy::Hybrid { k_t, .. },
            } => Some(k_t),
            _ => None,
        }
    }
}

pub fn version() -> String {
    format!(
        "{} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("QUEPP_GIT_DESCRIBE")
    )
}
