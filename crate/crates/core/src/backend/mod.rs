//! Noisy expectation-value estimation behind a backend interface.
//!
//! [`Backend`] is the seam between the estimator and whatever runs circuits.
//! [`SimulatorBackend`] is the built-in implementation: Pauli-twirled,
//! Pauli-stochastic noise with shot noise.

mod exact;
mod noise;
mod simulator;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::pauli::{PauliError, PauliString};

pub use exact::{noisy_pauli_propagation, NoiseLocation};
pub use noise::{local_anticommutes, Channel, ChannelSpec, CompiledNoise, NoiseModel, Readout};
pub use simulator::{SimulatorBackend, DEFAULT_TRAJECTORY_QUBITS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("non-Clifford circuit on {num_qubits} qubits exceeds the trajectory simulator cap of {cap}; reduce the qubit count")]
    Capability { num_qubits: usize, cap: usize },
    #[error("invalid execution plan: {0}")]
    Plan(String),
    #[error("invalid noise model: {0}")]
    Noise(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("exact noisy propagation exceeded {0} Pauli terms")]
    TooManyTerms(usize),
}

/// How many twirls and shots to run per circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub num_twirls: usize,
    pub shots_per_twirl: usize,
    #[serde(default)]
    pub seed: u64,
    /// Execute twirl instances of different circuits round-robin.
    #[serde(default)]
    pub interleave: bool,
    /// Return exact noisy expectations instead of sampling shots.
    #[serde(default)]
    pub infinite_shots: bool,
}

impl ExecutionPlan {
    pub fn new(num_twirls: usize, shots_per_twirl: usize, seed: u64) -> Self {
        ExecutionPlan {
            num_twirls,
            shots_per_twirl,
            seed,
            interleave: false,
            infinite_shots: false,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.num_twirls == 0 || self.shots_per_twirl == 0 {
            return Err(BackendError::Plan(
                "num_twirls and shots_per_twirl must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn total_shots(&self) -> u64 {
        self.num_twirls as u64 * self.shots_per_twirl as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyEstimate {
    pub mean: f64,
    /// Standard error of the mean of the per-shot ±1 outcomes (0 for exact results).
    pub std_error: f64,
    pub total_shots: u64,
    #[serde(default)]
    pub exact: bool,
}

impl NoisyEstimate {
    /// Estimate from the sum of `shots` outcomes in `{-1, +1}`.
    pub fn from_outcome_sum(sum: i64, shots: u64) -> Self {
        let n = shots as f64;
        let mean = sum as f64 / n;
        let var = if shots > 1 {
            (1.0 - mean * mean) * n / (n - 1.0)
        } else {
            1.0
        };
        NoisyEstimate {
            mean,
            std_error: (var.max(0.0) / n).sqrt(),
            total_shots: shots,
            exact: false,
        }
    }

    pub fn exact(mean: f64) -> Self {
        NoisyEstimate {
            mean,
            std_error: 0.0,
            total_shots: 0,
            exact: true,
        }
    }
}

/// One circuit/observable pair to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub circuit: Circuit,
    pub observable: PauliString,
}

impl Job {
    pub fn new(circuit: Circuit, observable: PauliString) -> Self {
        Job {
            circuit,
            observable,
        }
    }
}

/// Anything that can estimate noisy expectation values.
///
/// Results come back in submission order, one per job; a failing job never
/// affects the others.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn submit_batch(
        &self,
        jobs: &[Job],
        plan: &ExecutionPlan,
    ) -> Vec<Result<NoisyEstimate, BackendError>>;

    fn estimate(
        &self,
        circuit: &Circuit,
        observable: &PauliString,
        plan: &ExecutionPlan,
    ) -> Result<NoisyEstimate, BackendError> {
        self.submit_batch(&[Job::new(circuit.clone(), observable.clone())], plan)
            .pop()
            .expect("one result per job")
    }
}

/// Order in which `(job, twirl)` units are executed.
pub fn execution_order(
    num_jobs: usize,
    num_twirls: usize,
    interleave: bool,
) -> Vec<(usize, usize)> {
    if interleave {
        (0..num_twirls)
            .flat_map(|t| (0..num_jobs).map(move |j| (j, t)))
            .collect()
    } else {
        (0..num_jobs)
            .flat_map(|j| (0..num_twirls).map(move |t| (j, t)))
            .collect()
    }
}
