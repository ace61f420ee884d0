//! End-to-end QuEPP runs: build the ensemble, execute it together with the
//! target circuit on a backend, then combine.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError, ExecutionPlan, Job, NoisyEstimate};
use crate::circuit::Circuit;
use crate::clifford_eval::{path_circuit, EvalError};
use crate::cpt::{
    enumerate_paths_parallel, CptError, EnumerationStats, PathId, PauliPath, TruncationPolicy,
};
use crate::pauli::PauliString;
use crate::quepp::{
    quepp_from_records, BoundContext, EnsembleRecord, EtaMethod, QueppError, QueppResult,
};
use crate::sampler::{build_ensemble, SamplerConfig, SamplerError, SamplingReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Cpt(#[from] CptError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quepp(#[from] QueppError),
    #[error("target circuit failed: {0}")]
    Target(BackendError),
    #[error("ensemble circuit {path} failed: {error} (pass allow-partial to continue without it)")]
    Ensemble { path: PathId, error: BackendError },
    #[error("every ensemble circuit failed")]
    NothingExecuted,
}

impl PipelineError {
    /// The backend error behind this failure, if any.
    pub fn backend_error(&self) -> Option<&BackendError> {
        match self {
            PipelineError::Target(e) | PipelineError::Ensemble { error: e, .. } => Some(e),
            _ => None,
        }
    }
}

/// Where the ensemble comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSource {
    Truncation { policy: TruncationPolicy },
    Sampler { config: SamplerConfig },
}

impl EnsembleSource {
    pub fn order(k_t: usize) -> Self {
        EnsembleSource::Truncation {
            policy: TruncationPolicy::Order { k_t },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub source: EnsembleSource,
    #[serde(default)]
    pub eta_method: EtaMethod,
    pub plan: ExecutionPlan,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub allow_partial: bool,
}

fn one() -> usize {
    1
}

/// Boosted estimate using the first `ensemble_size` records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixPoint {
    pub ensemble_size: usize,
    pub classical: f64,
    pub eta: f64,
    pub boosted: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPath {
    pub path: PathId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub result: QueppResult,
    /// Records in ensemble order (enumeration or first-acceptance order).
    pub records: Vec<EnsembleRecord>,
    pub target: NoisyEstimate,
    pub context: BoundContext,
    pub series: Vec<PrefixPoint>,
    #[serde(default)]
    pub enumeration: Option<EnumerationStats>,
    #[serde(default)]
    pub sampling: Option<SamplingReport>,
    #[serde(default)]
    pub skipped: Vec<SkippedPath>,
}

impl PipelineOutput {
    /// The estimate restricted to paths of order at most `k_t`.
    pub fn restrict_order(&self, k_t: usize, method: EtaMethod) -> Result<QueppResult, QueppError> {
        let sub: Vec<EnsembleRecord> = self
            .records
            .iter()
            .filter(|r| r.path.order <= k_t)
            .cloned()
            .collect();
        let ctx = BoundContext {
            k_t: Some(k_t),
            ..self.context
        };
        quepp_from_records(&sub, &self.target, method, &ctx)
    }
}

/// Boosted value, η and standard error of a record prefix, without bounds.
pub fn prefix_point(
    records: &[EnsembleRecord],
    target: &NoisyEstimate,
    method: EtaMethod,
) -> Result<PrefixPoint, QueppError> {
    let ctx = BoundContext {
        num_rotations: 0,
        k_t: None,
        theta_star: 0.0,
    };
    let r = quepp_from_records(records, target, method, &ctx)?;
    Ok(PrefixPoint {
        ensemble_size: records.len(),
        classical: r.classical_part,
        eta: r.eta.value,
        boosted: r.boosted,
        std_error: r.std_error,
    })
}

/// Prefix sizes for a convergence series: every size up to 64, then
/// roughly geometric steps, always ending at `m`.
pub fn series_sizes(m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=m.min(64)).collect();
    let mut s = 64.0f64;
    while (s as usize) < m {
        s *= 1.05;
        let k = (s as usize).min(m);
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    if m > 0 && out.last() != Some(&m) {
        out.push(m);
    }
    out
}

/// The ensemble paths for `source`, in ensemble order, excluding paths with
/// zero ideal expectation.
pub fn build_paths(
    circuit: &Circuit,
    observable: &PauliString,
    source: &EnsembleSource,
    workers: usize,
) -> Result<
    (
        Vec<PauliPath>,
        Option<EnumerationStats>,
        Option<SamplingReport>,
    ),
    PipelineError,
> {
    Ok(match source {
        EnsembleSource::Truncation { policy } => {
            let (paths, stats) =
                enumerate_paths_parallel(circuit, observable, *policy, false, workers)?;
            (paths, Some(stats), None)
        }
        EnsembleSource::Sampler { config } => {
            let e = build_ensemble(circuit, observable, config)?;
            (e.paths, None, Some(e.report))
        }
    })
}

/// Runs the protocol on `circuit`, whose rotations are first normalized to
/// `|θ| ≤ π/4` by splitting off quarter turns.
pub fn run_quepp(
    circuit: &Circuit,
    observable: &PauliString,
    backend: &dyn Backend,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let normalized = circuit.normalize_rotations();
    let (paths, enumeration, sampling) =
        build_paths(&normalized, observable, &config.source, config.workers)?;

    let mut jobs = Vec::with_capacity(paths.len() + 1);
    jobs.push(Job::new(normalized.clone(), observable.clone()));
    for p in &paths {
        jobs.push(Job::new(
            path_circuit(&normalized, &p.branches)?,
            observable.clone(),
        ));
    }
    let mut results = backend.submit_batch(&jobs, &config.plan).into_iter();
    let target = results
        .next()
        .expect("one result per job")
        .map_err(PipelineError::Target)?;

    let mut records = Vec::with_capacity(paths.len());
    let mut skipped = Vec::new();
    for (p, res) in paths.iter().zip(results) {
        match res {
            Ok(noisy) => records.push(EnsembleRecord::new(p, noisy)?),
            Err(error) if config.allow_partial => skipped.push(SkippedPath {
                path: p.path_id.clone(),
                error: error.to_string(),
            }),
            Err(error) => {
                return Err(PipelineError::Ensemble {
                    path: p.path_id.clone(),
                    error,
                })
            }
        }
    }
    if records.is_empty() && !paths.is_empty() {
        return Err(PipelineError::NothingExecuted);
    }

    let k_t = match &config.source {
        EnsembleSource::Truncation {
            policy: TruncationPolicy::Full,
        } => Some(normalized.num_rotations()),
        EnsembleSource::Truncation {
            policy: TruncationPolicy::Order { k_t },
        } => Some(*k_t),
        _ => None,
    };
    let context = BoundContext {
        num_rotations: normalized.num_rotations(),
        k_t,
        theta_star: normalized.max_abs_angle(),
    };
    let result = quepp_from_records(&records, &target, config.eta_method, &context)?;
    let series = series_sizes(records.len())
        .into_iter()
        .map(|m| prefix_point(&records[..m], &target, config.eta_method))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PipelineOutput {
        result,
        records,
        target,
        context,
        series,
        enumeration,
        sampling,
        skipped,
    })
}
