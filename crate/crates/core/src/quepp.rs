//! The boosted estimator: per-circuit rescaling factors, the global η,
//! the boosted expectation value and its variance and bias bounds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::NoisyEstimate;
use crate::cpt::{classical_cpt_estimate, PathRecord, PauliPath};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueppError {
    #[error("no ensemble records")]
    Empty,
    #[error("path {0} has zero ideal expectation and cannot be rescaled")]
    ZeroIdeal(String),
    #[error("degenerate η estimate: {0}")]
    Degenerate(String),
    #[error("classical and noisy ensembles cover different path sets")]
    PathSetMismatch,
    #[error("length mismatch: {0}")]
    Length(String),
}

/// One executed ensemble circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub path: PathRecord,
    pub ideal: i8,
    pub noisy: NoisyEstimate,
    /// `η_{i,k} = noisy / ideal`.
    pub eta: f64,
}

impl EnsembleRecord {
    pub fn new(path: &PauliPath, noisy: NoisyEstimate) -> Result<Self, QueppError> {
        Self::from_record(path.record(), noisy)
    }

    pub fn from_record(path: PathRecord, noisy: NoisyEstimate) -> Result<Self, QueppError> {
        if path.ideal_expectation == 0 {
            return Err(QueppError::ZeroIdeal(path.path_id.to_string()));
        }
        let ideal = path.ideal_expectation;
        Ok(EnsembleRecord {
            eta: noisy.mean / ideal as f64,
            ideal,
            noisy,
            path,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.path.coefficient
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMethod {
    #[default]
    Median,
    WeightedAverage,
    Balance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaChoice {
    pub method: EtaMethod,
    pub value: f64,
    /// Set when the requested method was degenerate and the median was used.
    #[serde(default)]
    pub fell_back_to_median: bool,
    /// No circuit with nonzero ideal expectation was executed, so η could
    /// not be learned and 1 is used. The residual then has zero ideal value.
    #[serde(default)]
    pub unlearned: bool,
}

fn etas(records: &[EnsembleRecord]) -> Result<Vec<f64>, QueppError> {
    if records.is_empty() {
        return Err(QueppError::Empty);
    }
    Ok(records.iter().map(|r| r.eta).collect())
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / 2.0
    }
}

pub fn eta_median(records: &[EnsembleRecord]) -> Result<f64, QueppError> {
    Ok(median_of(etas(records)?))
}

/// `Σ g η ideal / Σ g ideal`.
pub fn eta_weighted_average(records: &[EnsembleRecord]) -> Result<f64, QueppError> {
    if records.is_empty() {
        return Err(QueppError::Empty);
    }
    let num: f64 = records
        .iter()
        .map(|r| r.coefficient() * r.eta * r.ideal as f64)
        .sum();
    let den: f64 = records
        .iter()
        .map(|r| r.coefficient() * r.ideal as f64)
        .sum();
    if den.abs() < 1e-300 {
        return Err(QueppError::Degenerate("Σ g · ideal vanishes".into()));
    }
    Ok(num / den)
}

/// Sample point minimizing `Σ_i |1 - η_i/η|`; on ties the larger η wins.
///
/// Between two consecutive sample points the objective is monotone with
/// slope sign set by `Σ_{η_i<η} η_i - Σ_{η_i>η} η_i`, so its minimum sits at
/// the point where the sums below and above balance.
pub fn eta_balance(records: &[EnsembleRecord]) -> Result<f64, QueppError> {
    balance_point(&etas(records)?)
}

pub fn balance_point(values: &[f64]) -> Result<f64, QueppError> {
    if values.is_empty() {
        return Err(QueppError::Empty);
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let objective = |eta: f64| v.iter().map(|x| (1.0 - x / eta).abs()).sum::<f64>();
    let mut best: Option<(f64, f64)> = None;
    for &cand in v.iter().filter(|x| **x > 0.0) {
        let f = objective(cand);
        let tol = 1e-12 * f.abs().max(1.0);
        match best {
            Some((bf, _)) if f > bf + tol => {}
            Some((bf, _)) if f >= bf - tol => best = Some((bf.min(f), cand)),
            _ => best = Some((f, cand)),
        }
    }
    best.map(|(_, eta)| eta)
        .ok_or_else(|| QueppError::Degenerate("no positive η sample".into()))
}

/// All three global η estimates side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaSummary {
    pub median: f64,
    pub weighted_average: Option<f64>,
    pub balance: Option<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Records with `|η_{i,k}| > 1`, which only shot noise can produce.
    pub above_one: usize,
}

impl EtaSummary {
    pub fn from_records(records: &[EnsembleRecord]) -> Result<Self, QueppError> {
        let v = etas(records)?;
        Ok(EtaSummary {
            median: median_of(v.clone()),
            weighted_average: eta_weighted_average(records).ok(),
            balance: eta_balance(records).ok(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            above_one: v.iter().filter(|x| x.abs() > 1.0).count(),
        })
    }
}

pub fn choose_eta(records: &[EnsembleRecord], method: EtaMethod) -> Result<EtaChoice, QueppError> {
    let direct = match method {
        EtaMethod::Median => eta_median(records),
        EtaMethod::WeightedAverage => eta_weighted_average(records),
        EtaMethod::Balance => eta_balance(records),
    };
    let choice = match direct {
        Ok(value) => EtaChoice {
            method,
            value,
            fell_back_to_median: false,
            unlearned: false,
        },
        Err(QueppError::Degenerate(_)) => EtaChoice {
            method,
            value: eta_median(records)?,
            fell_back_to_median: true,
            unlearned: false,
        },
        Err(e) => return Err(e),
    };
    if choice.value == 0.0 || !choice.value.is_finite() {
        return Err(QueppError::Degenerate(format!("η = {}", choice.value)));
    }
    Ok(choice)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBound {
    /// `γ · P / N`.
    pub sigma_sq: f64,
    /// `Σ g² (1 - η_i²) / (η² N)`.
    pub exact_sigma_sq: f64,
    /// `1 / η²`.
    pub gamma: f64,
    /// `Σ g²` over the executed ensemble.
    pub p_kt: f64,
    pub shots: u64,
}

pub fn variance_bound(records: &[EnsembleRecord], eta: f64, shots: u64) -> VarianceBound {
    let mut sorted: Vec<&EnsembleRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.path.path_id.cmp(&b.path.path_id));
    let gamma = 1.0 / (eta * eta);
    let n = shots.max(1) as f64;
    let p_kt: f64 = sorted.iter().map(|r| r.coefficient().powi(2)).sum();
    let exact: f64 = sorted
        .iter()
        .map(|r| r.coefficient().powi(2) * (1.0 - r.eta * r.eta))
        .sum::<f64>()
        * gamma
        / n;
    VarianceBound {
        sigma_sq: gamma * p_kt / n,
        exact_sigma_sq: exact,
        gamma,
        p_kt,
        shots,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinatorialBound {
    /// `|1 - η*/η|`.
    pub factor: f64,
    pub eta_star: f64,
    /// `factor · Σ_{k=K_T+1}^{K} C(K,k) sin^k θ*`.
    pub exact_sum: f64,
    /// `factor · (e K sin θ* / (K_T+1))^{K_T+1}`, when `sin θ* ≤ (K_T+1)/K`.
    pub closed_form: Option<f64>,
}

/// `Σ_{k=from}^{K} C(K,k) s^k`, summed in log space.
pub fn binomial_tail(k_total: usize, from: usize, s: f64) -> f64 {
    if from > k_total || s == 0.0 {
        return 0.0;
    }
    let ln_s = s.ln();
    let mut ln_c = 0.0f64; // ln C(K, 0)
    let mut terms = Vec::with_capacity(k_total + 1 - from);
    for k in 0..=k_total {
        if k > 0 {
            ln_c += ((k_total - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= from {
            terms.push(ln_c + k as f64 * ln_s);
        }
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max.exp() * terms.iter().map(|t| (t - max).exp()).sum::<f64>()
}

pub fn bias_bound_combinatorial(
    k_total: usize,
    k_t: usize,
    theta_star: f64,
    eta: f64,
    eta_star: f64,
) -> CombinatorialBound {
    let factor = (1.0 - eta_star / eta).abs();
    let s = theta_star.sin().abs();
    let tail = binomial_tail(k_total, k_t + 1, s);
    let exact_sum = if tail == 0.0 { 0.0 } else { factor * tail };
    let closed_form = (k_t < k_total && s * k_total as f64 <= (k_t + 1) as f64).then(|| {
        let base = std::f64::consts::E * k_total as f64 * s / (k_t + 1) as f64;
        factor * base.powi(k_t as i32 + 1)
    });
    let closed_form = if k_t >= k_total {
        Some(0.0)
    } else {
        closed_form
    };
    CombinatorialBound {
        factor,
        eta_star,
        exact_sum,
        closed_form,
    }
}

/// `η_{i,k}` maximizing `|1 - η_{i,k}/η|`.
pub fn eta_star(records: &[EnsembleRecord], eta: f64) -> Option<f64> {
    records
        .iter()
        .map(|r| r.eta)
        .max_by(|a, b| (1.0 - a / eta).abs().total_cmp(&(1.0 - b / eta).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaBiasBound {
    /// `max(0, |η/η' - 1| · |⟨O⟩_M| - |δ|)`.
    pub worst_case: f64,
    /// `max(0, |η/η̄ - 1| · |⟨O⟩_M| - |δ|)`.
    pub average_case: f64,
    /// Both raw values were nonnegative, consistent with the same-sign assumption.
    pub valid: bool,
    pub eta_prime: f64,
    pub eta_bar: f64,
}

/// Heuristic bias bounds; `delta` is the measured boosting correction
/// `classical - noisy_ensemble / η`.
pub fn bias_bound_eta(
    mitigated_value: f64,
    eta: f64,
    eta_prime: f64,
    eta_bar: f64,
    delta: f64,
) -> Result<EtaBiasBound, QueppError> {
    if eta_prime == 0.0 || eta_bar == 0.0 {
        return Err(QueppError::Degenerate("η' or η̄ is zero".into()));
    }
    let worst = (eta / eta_prime - 1.0).abs() * mitigated_value.abs() - delta.abs();
    let average = (eta / eta_bar - 1.0).abs() * mitigated_value.abs() - delta.abs();
    Ok(EtaBiasBound {
        worst_case: worst.max(0.0),
        average_case: average.max(0.0),
        valid: worst >= 0.0 && average >= 0.0,
        eta_prime,
        eta_bar,
    })
}

/// `M + Σ g (ideal - mitigated)`, the generic boosted value.
pub fn bem_combine(
    mitigated_target: f64,
    ensemble_ideal: &[f64],
    ensemble_mitigated: &[f64],
    coefficients: &[f64],
) -> Result<f64, QueppError> {
    if ensemble_ideal.len() != ensemble_mitigated.len()
        || ensemble_ideal.len() != coefficients.len()
    {
        return Err(QueppError::Length(format!(
            "{} ideal, {} mitigated, {} coefficients",
            ensemble_ideal.len(),
            ensemble_mitigated.len(),
            coefficients.len()
        )));
    }
    Ok(mitigated_target
        + coefficients
            .iter()
            .zip(ensemble_ideal.iter().zip(ensemble_mitigated))
            .map(|(g, (i, m))| g * (i - m))
            .sum::<f64>())
}

/// Circuit facts the bias bounds need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    /// Number of rotations `K`.
    pub num_rotations: usize,
    /// Truncation order, when the ensemble is complete up to some order.
    pub k_t: Option<usize>,
    /// Largest `|θ|` in the circuit.
    pub theta_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueppResult {
    pub classical_part: f64,
    pub noisy_target: NoisyEstimate,
    pub noisy_ensemble_part: f64,
    pub residual: f64,
    pub eta: EtaChoice,
    pub eta_summary: Option<EtaSummary>,
    pub boosted: f64,
    pub std_error: f64,
    /// Mitigated target `⟨O⟩_noisy / η`.
    pub mitigated_target: f64,
    /// `classical - noisy_ensemble / η`.
    pub delta: f64,
    pub variance: VarianceBound,
    pub bias_combinatorial: Option<CombinatorialBound>,
    pub bias_eta: Option<EtaBiasBound>,
    /// `bem_combine(...) - boosted`, expected to vanish up to rounding.
    pub bem_identity_residual: f64,
    pub ensemble_size: usize,
    pub records: Vec<EnsembleRecord>,
}

fn sorted_by_id(records: &[EnsembleRecord]) -> Vec<&EnsembleRecord> {
    let mut v: Vec<&EnsembleRecord> = records.iter().collect();
    v.sort_by(|a, b| a.path.path_id.cmp(&b.path.path_id));
    v
}

/// Standard error of a global η.
fn eta_std_error(records: &[EnsembleRecord], choice: &EtaChoice) -> f64 {
    if choice.unlearned {
        return 0.0;
    }
    let m = records.len() as f64;
    let shot = |r: &EnsembleRecord| r.noisy.std_error / (r.ideal as f64).abs();
    if choice.method == EtaMethod::WeightedAverage && !choice.fell_back_to_median {
        let den: f64 = records
            .iter()
            .map(|r| r.coefficient() * r.ideal as f64)
            .sum();
        let num: f64 = records
            .iter()
            .map(|r| (r.coefficient() * r.ideal as f64 * shot(r)).powi(2))
            .sum();
        return num.sqrt() / den.abs();
    }
    let shot_floor = records.iter().map(|r| shot(r).powi(2)).sum::<f64>().sqrt() / m;
    if records.len() < 2 {
        return shot_floor;
    }
    let mean = records.iter().map(|r| r.eta).sum::<f64>() / m;
    let var = records.iter().map(|r| (r.eta - mean).powi(2)).sum::<f64>() / (m - 1.0);
    // Large-sample standard error of a median.
    ((std::f64::consts::PI / 2.0).sqrt() * var.sqrt() / m.sqrt()).max(shot_floor)
}

/// Boosted estimate with the classical part taken from the records themselves.
pub fn quepp_from_records(
    records: &[EnsembleRecord],
    target: &NoisyEstimate,
    method: EtaMethod,
    ctx: &BoundContext,
) -> Result<QueppResult, QueppError> {
    let classical: f64 = sorted_by_id(records)
        .iter()
        .map(|r| r.coefficient() * r.ideal as f64)
        .sum();
    combine(records, target, classical, method, ctx)
}

/// Protocol steps 3 to 5. `classical_paths` must contain exactly the paths
/// behind `records` (plus, optionally, zero-expectation paths, which
/// contribute nothing).
pub fn quepp_estimate(
    records: &[EnsembleRecord],
    target: &NoisyEstimate,
    classical_paths: &[PauliPath],
    method: EtaMethod,
    ctx: &BoundContext,
) -> Result<QueppResult, QueppError> {
    let classical_ids: BTreeSet<_> = classical_paths
        .iter()
        .filter(|p| p.ideal_expectation != 0)
        .map(|p| &p.path_id)
        .collect();
    let record_ids: BTreeSet<_> = records.iter().map(|r| &r.path.path_id).collect();
    if classical_ids != record_ids || record_ids.len() != records.len() {
        return Err(QueppError::PathSetMismatch);
    }
    combine(
        records,
        target,
        classical_cpt_estimate(classical_paths),
        method,
        ctx,
    )
}

fn combine(
    records: &[EnsembleRecord],
    target: &NoisyEstimate,
    classical_part: f64,
    method: EtaMethod,
    ctx: &BoundContext,
) -> Result<QueppResult, QueppError> {
    let eta = if records.is_empty() {
        EtaChoice {
            method,
            value: 1.0,
            fell_back_to_median: false,
            unlearned: true,
        }
    } else {
        choose_eta(records, method)?
    };
    let sorted = sorted_by_id(records);
    let noisy_ensemble_part: f64 = sorted.iter().map(|r| r.coefficient() * r.noisy.mean).sum();
    let residual = target.mean - noisy_ensemble_part;
    let boosted = classical_part + residual / eta.value;
    let mitigated_target = target.mean / eta.value;
    let delta = classical_part - noisy_ensemble_part / eta.value;

    let ideal: Vec<f64> = sorted.iter().map(|r| r.ideal as f64).collect();
    let mitigated: Vec<f64> = sorted.iter().map(|r| r.noisy.mean / eta.value).collect();
    let coeffs: Vec<f64> = sorted.iter().map(|r| r.coefficient()).collect();
    let bem = bem_combine(mitigated_target, &ideal, &mitigated, &coeffs)?;

    let shot_var = (target.std_error.powi(2)
        + sorted
            .iter()
            .map(|r| (r.coefficient() * r.noisy.std_error).powi(2))
            .sum::<f64>())
        / (eta.value * eta.value);
    let eta_se = eta_std_error(records, &eta);
    let std_error = (shot_var + (residual / (eta.value * eta.value) * eta_se).powi(2)).sqrt();

    let shots = if target.exact { 0 } else { target.total_shots };
    let variance = variance_bound(records, eta.value, shots);
    let bias_combinatorial = match (ctx.k_t, eta_star(records, eta.value)) {
        (Some(k_t), Some(star)) => Some(bias_bound_combinatorial(
            ctx.num_rotations,
            k_t,
            ctx.theta_star,
            eta.value,
            star,
        )),
        _ => None,
    };
    let eta_prime = records.iter().map(|r| r.eta).max_by(|a, b| {
        (1.0 - eta.value / a)
            .abs()
            .total_cmp(&(1.0 - eta.value / b).abs())
    });
    let eta_bar = records.iter().map(|r| r.eta).sum::<f64>() / records.len() as f64;
    let bias_eta = eta_prime
        .and_then(|ep| bias_bound_eta(mitigated_target, eta.value, ep, eta_bar, delta).ok());

    Ok(QueppResult {
        classical_part,
        noisy_target: *target,
        noisy_ensemble_part,
        residual,
        eta,
        eta_summary: if records.is_empty() {
            None
        } else {
            Some(EtaSummary::from_records(records)?)
        },
        boosted,
        std_error,
        mitigated_target,
        delta,
        variance,
        bias_combinatorial,
        bias_eta,
        bem_identity_residual: bem - boosted,
        ensemble_size: records.len(),
        records: records.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpt::PathId;
    use crate::pauli::PauliString;

    fn rec(id: u32, g: f64, ideal: i8, noisy: f64) -> EnsembleRecord {
        let path = PathRecord {
            path_id: PathId(vec![id]),
            order: 1,
            coefficient: g,
            sin_indices: vec![id as usize],
            frame: PauliString::identity(1),
            ideal_expectation: ideal,
        };
        EnsembleRecord::from_record(
            path,
            NoisyEstimate {
                mean: noisy,
                std_error: 0.01,
                total_shots: 100,
                exact: false,
            },
        )
        .unwrap()
    }

    fn with_etas(v: &[f64]) -> Vec<EnsembleRecord> {
        v.iter()
            .enumerate()
            .map(|(i, &e)| rec(i as u32, 0.5, 1, e))
            .collect()
    }

    #[test]
    fn median_conventions() {
        assert_eq!(eta_median(&with_etas(&[0.8, 0.8, 0.8])).unwrap(), 0.8);
        assert!((eta_median(&with_etas(&[0.9, 0.5])).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(eta_median(&[]), Err(QueppError::Empty));
    }

    #[test]
    fn balance_examples() {
        assert_eq!(balance_point(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(balance_point(&[0.2, 0.3, 0.5]).unwrap(), 0.5);
        assert_eq!(balance_point(&[0.1, 0.2, 0.3, 0.4, 2.0]).unwrap(), 2.0);
        assert_eq!(balance_point(&[0.6, 0.7, 0.8]).unwrap(), 0.7);
    }

    #[test]
    fn weighted_average_by_hand() {
        // g η ideal: 0.5·0.8·1 + (-0.25)·0.6·(-1) + 0.1·0.9·1 = 0.4 + 0.15 + 0.09
        // g ideal:   0.5 + 0.25 + 0.1
        let r = vec![
            rec(0, 0.5, 1, 0.8),
            rec(1, -0.25, -1, -0.6),
            rec(2, 0.1, 1, 0.9),
        ];
        let w = eta_weighted_average(&r).unwrap();
        assert!((w - 0.64 / 0.85).abs() < 1e-15);
        let zero = vec![rec(0, 0.5, 1, 0.8), rec(1, 0.5, -1, -0.6)];
        assert!(matches!(
            eta_weighted_average(&zero),
            Err(QueppError::Degenerate(_))
        ));
        let c = choose_eta(&zero, EtaMethod::WeightedAverage).unwrap();
        assert!(c.fell_back_to_median);
    }

    #[test]
    fn zero_ideal_is_rejected() {
        let path = PathRecord {
            path_id: PathId(vec![]),
            order: 0,
            coefficient: 1.0,
            sin_indices: vec![],
            frame: PauliString::identity(1),
            ideal_expectation: 0,
        };
        assert!(EnsembleRecord::from_record(path, NoisyEstimate::exact(0.0)).is_err());
    }

    #[test]
    fn variance_examples() {
        let v = variance_bound(&[rec(0, 0.8f64.sqrt(), 1, 1.0)], 0.5, 10_000);
        assert!((v.sigma_sq - 3.2e-4).abs() < 1e-15);
        assert_eq!(v.gamma, 4.0);
        let noiseless = variance_bound(&with_etas(&[1.0, 1.0]), 1.0, 100);
        assert_eq!(noiseless.exact_sigma_sq, 0.0);
    }

    #[test]
    fn combinatorial_bound_cases() {
        let b = bias_bound_combinatorial(5, 5, 0.3, 0.8, 0.6);
        assert_eq!(b.exact_sum, 0.0);
        let b = bias_bound_combinatorial(50, 30, std::f64::consts::PI / 5.0, 1.0, 0.8);
        let s = (std::f64::consts::PI / 5.0).sin();
        let mut direct = 0.0;
        let mut c = 1.0f64;
        for k in 0..=50u32 {
            if k > 0 {
                c = c * (50 - k + 1) as f64 / k as f64;
            }
            if k >= 31 {
                direct += c * s.powi(k as i32);
            }
        }
        assert!((b.exact_sum - 0.2 * direct).abs() < 1e-12 * direct);
        assert!(b.closed_form.unwrap() >= b.exact_sum);
        assert!(
            bias_bound_combinatorial(50, 10, std::f64::consts::PI / 5.0, 1.0, 0.8)
                .closed_form
                .is_none()
        );
        let b = bias_bound_combinatorial(10, 4, 0.2, 1.0, 0.5);
        assert!(b.closed_form.unwrap() >= b.exact_sum);
    }

    #[test]
    fn eta_bias_uniform_limit() {
        let b = bias_bound_eta(0.9, 0.8, 0.8, 0.8, 0.05).unwrap();
        assert_eq!(b.worst_case, 0.0);
        assert!(!b.valid);
        let b = bias_bound_eta(1.0, 0.8, 0.5, 0.7, 0.1).unwrap();
        assert!((b.worst_case - (0.6 - 0.1)).abs() < 1e-15);
        assert!((b.average_case - ((0.8f64 / 0.7 - 1.0) - 0.1)).abs() < 1e-15);
        assert!(bias_bound_eta(1.0, 0.8, 0.0, 0.7, 0.1).is_err());
    }

    #[test]
    fn bem_degenerate_cases() {
        assert_eq!(bem_combine(0.7, &[], &[], &[]).unwrap(), 0.7);
        assert_eq!(
            bem_combine(0.7, &[1.0, -1.0], &[1.0, -1.0], &[0.3, 0.2]).unwrap(),
            0.7
        );
        assert!(bem_combine(0.7, &[1.0], &[], &[]).is_err());
    }

    #[test]
    fn defining_identities_hold() {
        let r = vec![
            rec(0, 0.6, 1, 0.7),
            rec(1, -0.3, -1, -0.75),
            rec(2, 0.2, 1, 0.72),
        ];
        let target = NoisyEstimate {
            mean: 0.55,
            std_error: 0.01,
            total_shots: 1000,
            exact: false,
        };
        let ctx = BoundContext {
            num_rotations: 6,
            k_t: Some(1),
            theta_star: 0.6,
        };
        let q = quepp_from_records(&r, &target, EtaMethod::Median, &ctx).unwrap();
        assert_eq!(q.residual, target.mean - q.noisy_ensemble_part);
        assert_eq!(q.boosted, q.classical_part + q.residual / q.eta.value);
        assert!(q.bem_identity_residual.abs() < 1e-12);
        assert_eq!(q.eta.value, 0.72);
    }

    #[test]
    fn empty_ensemble_leaves_the_target_unscaled() {
        let target = NoisyEstimate {
            mean: 0.03,
            std_error: 0.02,
            total_shots: 1000,
            exact: false,
        };
        let ctx = BoundContext {
            num_rotations: 0,
            k_t: Some(0),
            theta_star: 0.0,
        };
        let q = quepp_from_records(&[], &target, EtaMethod::Balance, &ctx).unwrap();
        assert!(q.eta.unlearned);
        assert_eq!((q.boosted, q.std_error), (0.03, 0.02));
        assert!(q.eta_summary.is_none() && q.bias_eta.is_none());
    }
}
