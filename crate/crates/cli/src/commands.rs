//! `generate`, `cpt`, `sample` and `quepp`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use quepp_core::cpt::EnumerationStats;
use quepp_core::pipeline::{
    build_paths, run_quepp, EnsembleSource, PipelineConfig, PrefixPoint, SkippedPath,
};
use quepp_core::{
    classical_cpt_estimate, enumerate_paths_parallel, ideal_expectation, merged_bfs_cpt, Circuit,
    CircuitManifest, Family, NoisyEstimate, PathRecord, PauliString, QueppResult, SamplingReport,
    TruncationPolicy,
};
use serde::{Deserialize, Serialize};

use crate::config::{config_error, version, InternalError, RunConfig, SCHEMA_VERSION};

/// Ideal expectation from the cheapest exact source available.
pub fn oracle(config: &RunConfig, circuit: &Circuit, observable: &PauliString) -> Option<f64> {
    match config.experiment.family {
        // A mirror circuit is the identity, so the input state decides.
        Family::Mirror1d | Family::Mirror2d => {
            Some(observable.expectation_on_stabilizer_input(circuit.input_kind()) as f64)
        }
        Family::Trotter if circuit.num_qubits() <= config.oracle_max_qubits => {
            Some(ideal_expectation(circuit, observable))
        }
        Family::Trotter => None,
    }
}

fn prepare_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Common header of every result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub kind: String,
    pub version: String,
    pub config: RunConfig,
}

impl Header {
    fn new(kind: &str, config: &RunConfig) -> Self {
        Header {
            schema_version: SCHEMA_VERSION,
            kind: kind.into(),
            version: version(),
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedCircuit {
    pub theta: f64,
    pub file: String,
    pub manifest: CircuitManifest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateOutput {
    #[serde(flatten)]
    pub header: Header,
    pub observable: String,
    pub circuits: Vec<GeneratedCircuit>,
}

pub fn cmd_generate(config: &RunConfig) -> Result<PathBuf> {
    let dir = prepare_dir(config)?;
    let thetas = config.experiment.thetas();
    let mut circuits = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        let circuit = config.circuit_at(theta)?;
        let file = if thetas.len() == 1 {
            "circuit.txt".to_string()
        } else {
            format!("circuit_{i:03}.txt")
        };
        fs::write(dir.join(&file), circuit.to_text())?;
        circuits.push(GeneratedCircuit {
            theta,
            file,
            manifest: circuit.manifest(),
        });
    }
    let out = GenerateOutput {
        header: Header::new("generate", config),
        observable: config.observable()?.to_string(),
        circuits,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &out)?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderPoint {
    pub k_t: usize,
    pub paths: usize,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermsPoint {
    pub max_terms: usize,
    pub final_terms: usize,
    pub peak_terms: usize,
    pub capped: bool,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CptPoint {
    pub theta: f64,
    pub num_rotations: usize,
    pub ideal: Option<f64>,
    pub order_series: Vec<OrderPoint>,
    pub enumeration: EnumerationStats,
    pub terms_series: Vec<TermsPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CptOutput {
    #[serde(flatten)]
    pub header: Header,
    pub points: Vec<CptPoint>,
}

/// Order-truncated classical sums for every `k_t ≤ max_order`, from a single enumeration.
pub fn order_series(
    circuit: &Circuit,
    observable: &PauliString,
    max_order: usize,
    workers: usize,
) -> Result<(Vec<OrderPoint>, EnumerationStats)> {
    let k_max = max_order.min(circuit.num_rotations());
    let (paths, stats) = enumerate_paths_parallel(
        circuit,
        observable,
        TruncationPolicy::Order { k_t: k_max },
        false,
        workers,
    )?;
    let series = (0..=k_max)
        .map(|k| {
            let sub: Vec<_> = paths.iter().filter(|p| p.order() <= k).cloned().collect();
            OrderPoint {
                k_t: k,
                paths: sub.len(),
                estimate: classical_cpt_estimate(&sub),
            }
        })
        .collect();
    Ok((series, stats))
}

pub fn cmd_cpt(config: &RunConfig) -> Result<PathBuf> {
    let dir = prepare_dir(config)?;
    let observable = config.observable()?;
    let mut points = Vec::new();
    for theta in config.experiment.thetas() {
        let circuit = config.circuit_at(theta)?.normalize_rotations();
        let ideal = oracle(config, &circuit, &observable);
        let (order_series, enumeration) =
            order_series(&circuit, &observable, config.cpt.max_order, config.workers)?;
        let mut terms_series = Vec::new();
        let mut budget = 1usize;
        loop {
            let r = merged_bfs_cpt(&circuit, &observable, budget, config.cpt.epsilon)?;
            terms_series.push(TermsPoint {
                max_terms: budget,
                final_terms: r.final_terms,
                peak_terms: r.peak_terms,
                capped: r.capped,
                estimate: r.estimate,
            });
            if !r.capped || budget >= config.cpt.max_terms {
                break;
            }
            budget = (budget * 2).min(config.cpt.max_terms);
        }
        points.push(CptPoint {
            theta,
            num_rotations: circuit.num_rotations(),
            ideal,
            order_series,
            enumeration,
            terms_series,
        });
    }

    let mut w = csv_writer(&dir.join("cpt_order.csv"))?;
    w.write_record(["theta", "k_t", "paths", "estimate", "ideal"])?;
    for p in &points {
        for o in &p.order_series {
            w.write_record([
                p.theta.to_string(),
                o.k_t.to_string(),
                o.paths.to_string(),
                o.estimate.to_string(),
                cell(p.ideal),
            ])?;
        }
    }
    w.flush()?;
    let mut w = csv_writer(&dir.join("cpt_terms.csv"))?;
    w.write_record([
        "theta",
        "max_terms",
        "terms_kept",
        "capped",
        "estimate",
        "ideal",
    ])?;
    for p in &points {
        for t in &p.terms_series {
            w.write_record([
                p.theta.to_string(),
                t.max_terms.to_string(),
                t.final_terms.to_string(),
                t.capped.to_string(),
                t.estimate.to_string(),
                cell(p.ideal),
            ])?;
        }
    }
    w.flush()?;

    let path = dir.join("cpt.json");
    write_json(
        &path,
        &CptOutput {
            header: Header::new("cpt", config),
            points,
        },
    )?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplePoint {
    pub theta: f64,
    pub report: Option<SamplingReport>,
    pub enumeration: Option<EnumerationStats>,
    /// `Σ g · ideal` over the ensemble.
    pub classical: f64,
    pub ideal: Option<f64>,
    pub paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleOutput {
    #[serde(flatten)]
    pub header: Header,
    pub points: Vec<SamplePoint>,
}

pub fn cmd_sample(config: &RunConfig) -> Result<PathBuf> {
    if !matches!(config.ensemble, EnsembleSource::Sampler { .. }) {
        return Err(config_error(
            "`sample` needs an ensemble of kind \"sampler\"",
        ));
    }
    let dir = prepare_dir(config)?;
    let observable = config.observable()?;
    let mut points = Vec::new();
    for theta in config.experiment.thetas() {
        let circuit = config.circuit_at(theta)?.normalize_rotations();
        let (paths, enumeration, report) =
            build_paths(&circuit, &observable, &config.ensemble, config.workers)?;
        points.push(SamplePoint {
            theta,
            report,
            enumeration,
            classical: classical_cpt_estimate(&paths),
            ideal: oracle(config, &circuit, &observable),
            paths: paths.iter().map(|p| p.record()).collect(),
        });
    }
    let mut w = csv_writer(&dir.join("sample_paths.csv"))?;
    w.write_record(["theta", "index", "path_id", "order", "coefficient", "ideal"])?;
    for p in &points {
        for (i, r) in p.paths.iter().enumerate() {
            w.write_record([
                p.theta.to_string(),
                i.to_string(),
                r.path_id.to_string(),
                r.order.to_string(),
                r.coefficient.to_string(),
                r.ideal_expectation.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let path = dir.join("sample.json");
    write_json(
        &path,
        &SampleOutput {
            header: Header::new("sample", config),
            points,
        },
    )?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderRow {
    pub k_t: usize,
    pub cpt: f64,
    pub quepp: Option<f64>,
    pub std_error: Option<f64>,
}

/// Whether the boosted value agrees with the oracle within three standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCheck {
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueppPoint {
    pub theta: f64,
    pub ideal: Option<f64>,
    pub cpt: f64,
    pub unmitigated: NoisyEstimate,
    pub quepp: f64,
    pub std_error: f64,
    pub check: Option<OracleCheck>,
    pub orders: Vec<OrderRow>,
    pub series: Vec<PrefixPoint>,
    pub enumeration: Option<EnumerationStats>,
    pub sampling: Option<SamplingReport>,
    pub skipped: Vec<SkippedPath>,
    pub result: QueppResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueppOutput {
    #[serde(flatten)]
    pub header: Header,
    pub points: Vec<QueppPoint>,
}

fn self_check(r: &QueppResult) -> Result<()> {
    if r.residual != r.noisy_target.mean - r.noisy_ensemble_part
        || r.boosted != r.classical_part + r.residual / r.eta.value
    {
        return Err(InternalError("boosted-value identities do not hold".into()).into());
    }
    if r.bem_identity_residual.abs() > 1e-9 * r.boosted.abs().max(1.0) {
        return Err(InternalError(format!(
            "BEM cross-check differs by {}",
            r.bem_identity_residual
        ))
        .into());
    }
    Ok(())
}

pub fn cmd_quepp(config: &RunConfig) -> Result<PathBuf> {
    let dir = prepare_dir(config)?;
    let observable = config.observable()?;
    let backend = config.backend()?;
    let mut points = Vec::new();
    for (i, theta) in config.experiment.thetas().into_iter().enumerate() {
        let circuit = config.circuit_at(theta)?;
        let pc = PipelineConfig {
            source: config.ensemble.clone(),
            eta_method: config.eta_method,
            plan: config.plan_for(i),
            workers: config.workers,
            allow_partial: config.allow_partial,
        };
        let out = run_quepp(&circuit, &observable, &backend, &pc)?;
        self_check(&out.result)?;
        let ideal = oracle(config, &circuit, &observable);
        let orders = match config.order() {
            Some(k_max) => (0..=k_max)
                .map(|k| {
                    let sub: Vec<_> = out.records.iter().filter(|r| r.path.order <= k).collect();
                    let cpt = {
                        let mut s: Vec<_> = sub
                            .iter()
                            .map(|r| (&r.path.path_id, r.path.coefficient * r.ideal as f64))
                            .collect();
                        s.sort_by(|a, b| a.0.cmp(b.0));
                        s.iter().map(|x| x.1).sum()
                    };
                    let q = out.restrict_order(k, config.eta_method).ok();
                    OrderRow {
                        k_t: k,
                        cpt,
                        quepp: q.as_ref().map(|q| q.boosted),
                        std_error: q.as_ref().map(|q| q.std_error),
                    }
                })
                .collect(),
            None => Vec::new(),
        };
        let r = &out.result;
        let check = ideal.map(|v| {
            let error = (r.boosted - v).abs();
            let tolerance = (3.0 * r.std_error).max(1e-10);
            OracleCheck {
                error,
                tolerance,
                pass: error <= tolerance,
            }
        });
        points.push(QueppPoint {
            theta,
            ideal,
            cpt: r.classical_part,
            unmitigated: out.target,
            quepp: r.boosted,
            std_error: r.std_error,
            check,
            orders,
            series: out.series,
            enumeration: out.enumeration,
            sampling: out.sampling,
            skipped: out.skipped,
            result: out.result,
        });
    }

    let cpt_col = match config.order() {
        Some(k) => format!("cpt_K{k}"),
        None => "cpt".to_string(),
    };
    let mut w = csv_writer(&dir.join("quepp_sweep.csv"))?;
    w.write_record([
        "theta",
        "ideal",
        cpt_col.as_str(),
        "unmitigated",
        "unmitigated_se",
        "quepp",
        "quepp_se",
        "eta",
        "ensemble_size",
    ])?;
    for p in &points {
        w.write_record([
            p.theta.to_string(),
            cell(p.ideal),
            p.cpt.to_string(),
            p.unmitigated.mean.to_string(),
            p.unmitigated.std_error.to_string(),
            p.quepp.to_string(),
            p.std_error.to_string(),
            p.result.eta.value.to_string(),
            p.result.ensemble_size.to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv_writer(&dir.join("quepp_series.csv"))?;
    w.write_record([
        "theta",
        "ensemble_size",
        "estimate",
        "std_error",
        "classical",
        "eta",
    ])?;
    for p in &points {
        for s in &p.series {
            w.write_record([
                p.theta.to_string(),
                s.ensemble_size.to_string(),
                s.boosted.to_string(),
                s.std_error.to_string(),
                s.classical.to_string(),
                s.eta.to_string(),
            ])?;
        }
    }
    w.flush()?;
    if config.order().is_some() {
        let mut w = csv_writer(&dir.join("quepp_orders.csv"))?;
        w.write_record([
            "theta",
            "k_t",
            "cpt",
            "quepp",
            "std_error",
            "ideal",
            "bias_cpt",
            "bias_quepp",
        ])?;
        for p in &points {
            for o in &p.orders {
                let bias = |x: Option<f64>| p.ideal.zip(x).map(|(i, v)| (v - i).abs());
                w.write_record([
                    p.theta.to_string(),
                    o.k_t.to_string(),
                    o.cpt.to_string(),
                    cell(o.quepp),
                    cell(o.std_error),
                    cell(p.ideal),
                    cell(bias(Some(o.cpt))),
                    cell(bias(o.quepp)),
                ])?;
            }
        }
        w.flush()?;
    }

    let path = dir.join("quepp.json");
    write_json(
        &path,
        &QueppOutput {
            header: Header::new("quepp", config),
            points,
        },
    )?;
    Ok(path)
}
