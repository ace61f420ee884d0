//! Clifford perturbation theory, Pauli-path sampling and quantum-enhanced
//! Pauli propagation (QuEPP) error mitigation.

pub mod backend;
pub mod circuit;
pub mod clifford_eval;
pub mod cpt;
pub mod generate;
pub mod pauli;
pub mod pipeline;
pub mod quepp;
pub mod rng;
pub mod sampler;
pub mod statevector;

pub use backend::{
    Backend, BackendError, ExecutionPlan, Job, NoiseModel, NoisyEstimate, SimulatorBackend,
};
pub use circuit::{Circuit, CircuitError, CircuitManifest, GateOp, Rotation, ANGLE_EPS};
pub use clifford_eval::{
    backpropagate, ideal_path_expectation, BranchAssignment, Decision, EvalError,
};
pub use cpt::{
    classical_cpt_estimate, coefficient_power, enumerate_paths, enumerate_paths_parallel,
    merged_bfs_cpt, CptError, PathCoefficient, PathId, PathRecord, PauliPath, TruncationPolicy,
};
pub use generate::{Amount, Coupling, ExperimentSpec, Family, MirrorParams};
pub use pauli::{CliffordGate, CliffordKind, InputKind, PauliError, PauliOp, PauliString};
pub use pipeline::{
    run_quepp, EnsembleSource, PipelineConfig, PipelineError, PipelineOutput, PrefixPoint,
};
pub use quepp::{
    bem_combine, bias_bound_combinatorial, bias_bound_eta, eta_balance, eta_median,
    eta_weighted_average, quepp_estimate, quepp_from_records, variance_bound, BoundContext,
    EnsembleRecord, EtaChoice, EtaMethod, QueppError, QueppResult,
};
pub use sampler::{
    build_ensemble, empirical_distribution_check, SampledEnsemble, SamplerConfig,
    SamplingDistribution, SamplingReport,
};
pub use statevector::{ideal_expectation, StateVector};
