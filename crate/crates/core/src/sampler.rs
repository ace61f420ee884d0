//! Monte Carlo Pauli-path sampling.
//!
//! A walk propagates the observable backwards and, at each anticommuting
//! rotation, takes the cosine branch with probability `|cos θ| / (|cos θ| + |sin θ|)`.
//! With [`SamplingDistribution::DTilde`] commuting rotations are passed
//! through; with [`SamplingDistribution::DPostselected`] the walk survives a
//! commuting rotation only with probability `1 / (|cos θ| + |sin θ|)`, which
//! makes surviving paths distributed proportionally to `|g|`.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::cpt::{enumerate_paths, CptError, PathId, PauliPath, Program, TruncationPolicy};
use crate::pauli::PauliString;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Cpt(#[from] CptError),
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("circuit has more than {limit} paths; exhaustive comparison is infeasible")]
    TooManyPaths { limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingDistribution {
    #[default]
    DTilde,
    DPostselected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub target_unique_paths: usize,
    pub max_attempts: u64,
    #[serde(default)]
    pub distribution: SamplingDistribution,
    #[serde(default)]
    pub seed: u64,
    /// Independent sampling streams; results depend on this count but not on scheduling.
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl SamplerConfig {
    pub fn new(target_unique_paths: usize, max_attempts: u64, seed: u64) -> Self {
        SamplerConfig {
            target_unique_paths,
            max_attempts,
            distribution: SamplingDistribution::DTilde,
            seed,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.target_unique_paths == 0 {
            return Err(SamplerError::Config(
                "target_unique_paths must be at least 1".into(),
            ));
        }
        if self.max_attempts < self.target_unique_paths as u64 {
            return Err(SamplerError::Config(
                "max_attempts must be at least target_unique_paths".into(),
            ));
        }
        if self.workers == 0 {
            return Err(SamplerError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of one walk.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    /// Reached the input with nonzero ideal expectation.
    Accepted(PathId),
    /// Reached the input but the frame has zero expectation there.
    ZeroExpectation(PathId),
    /// Killed at a commuting rotation (post-selected mode only).
    Aborted,
}

impl SampleOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, SampleOutcome::Accepted(_))
    }

    pub fn path_id(&self) -> Option<&PathId> {
        match self {
            SampleOutcome::Accepted(id) | SampleOutcome::ZeroExpectation(id) => Some(id),
            SampleOutcome::Aborted => None,
        }
    }
}

/// A circuit compiled for repeated sampling.
#[derive(Debug, Clone)]
pub struct PathSampler {
    prog: Program,
    observable: PauliString,
    distribution: SamplingDistribution,
    /// `|cos θ_j| / (|cos θ_j| + |sin θ_j|)`.
    p_cos: Vec<f64>,
    /// `1 / (|cos θ_j| + |sin θ_j|)`.
    p_survive: Vec<f64>,
}

impl PathSampler {
    pub fn new(
        circuit: &Circuit,
        observable: &PauliString,
        distribution: SamplingDistribution,
    ) -> Result<Self, SamplerError> {
        let prog = Program::compile(circuit, observable)?;
        let norm: Vec<f64> = prog
            .cos
            .iter()
            .zip(&prog.sin)
            .map(|(c, s)| c.abs() + s.abs())
            .collect();
        Ok(PathSampler {
            p_cos: prog
                .cos
                .iter()
                .zip(&norm)
                .map(|(c, n)| c.abs() / n)
                .collect(),
            p_survive: norm.iter().map(|n| 1.0 / n).collect(),
            prog,
            observable: observable.clone(),
            distribution,
        })
    }

    /// One stochastic walk from the observable to the circuit input.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleOutcome {
        let prog = &self.prog;
        let mut frame = self.observable.clone();
        let mut sin: Vec<u32> = Vec::new();
        for j in (0..prog.num_rotations()).rev() {
            prog.apply_segment(j + 1, &mut frame);
            let generator = &prog.generators[j];
            if frame.anticommutes_unchecked(generator) {
                if rng.random::<f64>() >= self.p_cos[j] {
                    frame = frame.multiply_by_generator_unchecked(generator);
                    sin.push(j as u32);
                }
            } else if self.distribution == SamplingDistribution::DPostselected
                && rng.random::<f64>() >= self.p_survive[j]
            {
                return SampleOutcome::Aborted;
            }
        }
        prog.apply_segment(0, &mut frame);
        sin.reverse();
        let id = PathId(sin);
        if frame.expectation_on_stabilizer_input(prog.input) != 0 {
            SampleOutcome::Accepted(id)
        } else {
            SampleOutcome::ZeroExpectation(id)
        }
    }

    /// Probability that an unconditioned walk produces `path` (under `DTilde`),
    /// or the survival-weighted probability (under `DPostselected`).
    pub fn walk_probability(&self, path: &PauliPath) -> f64 {
        let mut p = 1.0;
        for &j in &path.coeff.cos_indices {
            p *= self.p_cos[j];
        }
        for &j in &path.coeff.sin_indices {
            p *= 1.0 - self.p_cos[j];
        }
        if self.distribution == SamplingDistribution::DPostselected {
            for (j, d) in path.branches.decisions.iter().enumerate() {
                if *d == crate::clifford_eval::Decision::Passthrough {
                    p *= self.p_survive[j];
                }
            }
        }
        p
    }
}

/// Single-walk convenience wrapper; compiles the circuit on every call.
pub fn sample_path<R: Rng + ?Sized>(
    circuit: &Circuit,
    observable: &PauliString,
    distribution: SamplingDistribution,
    rng: &mut R,
) -> Result<(Option<PauliPath>, bool), SamplerError> {
    let sampler = PathSampler::new(circuit, observable, distribution)?;
    let outcome = sampler.sample(rng);
    let accepted = outcome.is_accepted();
    let path = match outcome.path_id() {
        Some(id) => Some(PauliPath::from_sin_indices(
            circuit,
            observable,
            &id.0.iter().map(|&j| j as usize).collect::<Vec<_>>(),
        )?),
        None => None,
    };
    Ok((path, accepted))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub attempts: u64,
    pub accepted: u64,
    pub unique: u64,
    pub aborted: u64,
    pub zero_expectation: u64,
    /// Accepted draws that repeated an existing path.
    pub duplicates: u64,
    /// `max_attempts` ran out before `target_unique_paths` was reached.
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct SampledEnsemble {
    /// Unique accepted paths in order of first acceptance.
    pub paths: Vec<PauliPath>,
    pub report: SamplingReport,
}

/// Draws walks until `target_unique_paths` distinct accepted paths are found
/// or `max_attempts` walks have been made. Each entry carries its exact
/// coefficient, not its sampling weight.
pub fn build_ensemble(
    circuit: &Circuit,
    observable: &PauliString,
    config: &SamplerConfig,
) -> Result<SampledEnsemble, SamplerError> {
    config.validate()?;
    let sampler = PathSampler::new(circuit, observable, config.distribution)?;
    let workers = config.workers;
    let mut streams: Vec<rng::StreamRng> = (0..workers)
        .map(|w| rng::stream(config.seed, &[0x7361_6d70, w as u64]))
        .collect();
    let pool = if workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| SamplerError::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut report = SamplingReport::default();
    let mut seen: HashSet<PathId> = HashSet::new();
    let mut order: Vec<PathId> = Vec::new();
    let batch = 256usize;
    'rounds: while report.attempts < config.max_attempts {
        // Each stream draws a fixed batch; outcomes are consumed in stream order.
        let outcomes: Vec<Vec<SampleOutcome>> = match &pool {
            Some(pool) => pool.install(|| {
                streams
                    .par_iter_mut()
                    .map(|r| (0..batch).map(|_| sampler.sample(r)).collect())
                    .collect()
            }),
            None => streams
                .iter_mut()
                .map(|r| (0..batch).map(|_| sampler.sample(r)).collect())
                .collect(),
        };
        for outcome in outcomes.into_iter().flatten() {
            if report.attempts >= config.max_attempts {
                break 'rounds;
            }
            report.attempts += 1;
            match outcome {
                SampleOutcome::Aborted => report.aborted += 1,
                SampleOutcome::ZeroExpectation(_) => report.zero_expectation += 1,
                SampleOutcome::Accepted(id) => {
                    report.accepted += 1;
                    if seen.insert(id.clone()) {
                        order.push(id);
                        if order.len() >= config.target_unique_paths {
                            break 'rounds;
                        }
                    } else {
                        report.duplicates += 1;
                    }
                }
            }
        }
    }
    report.unique = order.len() as u64;
    report.saturated = order.len() < config.target_unique_paths;
    let paths = order
        .iter()
        .map(|id| {
            PauliPath::from_sin_indices(
                circuit,
                observable,
                &id.0.iter().map(|&j| j as usize).collect::<Vec<_>>(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampledEnsemble { paths, report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCheck {
    pub draws: u64,
    /// Draws that produced a complete path (all of them under `DTilde`).
    pub completed: u64,
    pub bins: usize,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Per-path observed counts and expected probabilities.
    pub table: Vec<(PathId, u64, f64)>,
}

/// Largest path count accepted by [`empirical_distribution_check`].
pub const MAX_CHECK_PATHS: usize = 1 << 16;

/// Pearson chi-square comparison of sampled path frequencies against the
/// analytic walk distribution (`DTilde`) or against `|g| / Σ|g|`
/// (`DPostselected`, conditioned on survival).
pub fn empirical_distribution_check(
    circuit: &Circuit,
    observable: &PauliString,
    distribution: SamplingDistribution,
    num_draws: u64,
    seed: u64,
) -> Result<DistributionCheck, SamplerError> {
    let sampler = PathSampler::new(circuit, observable, distribution)?;
    let mut expected: BTreeMap<PathId, f64> = BTreeMap::new();
    for path in enumerate_paths(circuit, observable, TruncationPolicy::Full, true)? {
        if expected.len() >= MAX_CHECK_PATHS {
            return Err(SamplerError::TooManyPaths {
                limit: MAX_CHECK_PATHS,
            });
        }
        let weight = match distribution {
            SamplingDistribution::DTilde => sampler.walk_probability(&path),
            SamplingDistribution::DPostselected => path.coefficient().abs(),
        };
        expected.insert(path.path_id, weight);
    }
    let total: f64 = expected.values().sum();
    for v in expected.values_mut() {
        *v /= total;
    }

    let mut rng = rng::stream(seed, &[0x6368_6932]);
    let mut counts: BTreeMap<PathId, u64> = BTreeMap::new();
    let mut completed = 0u64;
    for _ in 0..num_draws {
        if let Some(id) = sampler.sample(&mut rng).path_id() {
            completed += 1;
            *counts.entry(id.clone()).or_insert(0) += 1;
        }
    }

    let mut chi = 0.0;
    let mut bins = 0usize;
    let mut table = Vec::with_capacity(expected.len());
    for (id, &prob) in &expected {
        let observed = counts.remove(id).unwrap_or(0);
        if prob > 0.0 {
            let e = prob * completed as f64;
            chi += (observed as f64 - e).powi(2) / e;
            bins += 1;
        } else if observed > 0 {
            chi = f64::INFINITY;
        }
        table.push((id.clone(), observed, prob));
    }
    if !counts.is_empty() {
        // A sampled path the enumeration does not know about.
        chi = f64::INFINITY;
    }
    let dof = bins.saturating_sub(1);
    let p_value = if chi.is_infinite() {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(chi)
    };
    Ok(DistributionCheck {
        draws: num_draws,
        completed,
        bins,
        chi_square: chi,
        degrees_of_freedom: dof,
        p_value,
        table,
    })
}
