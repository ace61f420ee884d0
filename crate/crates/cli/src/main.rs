//! `quepp`: circuit generation, classical CPT, path sampling and QuEPP runs.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use quepp_core::pipeline::PipelineError;
use quepp_core::BackendError;

use config::{ConfigError, InternalError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "quepp", version = env!("CARGO_PKG_VERSION"), about = "Clifford perturbation theory and QuEPP error mitigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the experiment circuit(s) and a manifest.
    Generate(RunArgs),
    /// Classical CPT estimates: order series and merged-propagation series.
    Cpt(RunArgs),
    /// Draw a Monte Carlo path ensemble.
    Sample(RunArgs),
    /// Full QuEPP run against the simulated backend.
    Quepp(RunArgs),
    /// Merge result files into bias and sweep tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON); a result file re-runs its embedded config.
    #[arg(long)]
    config: PathBuf,
    /// Master seed for sampling and execution.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bit-exact reproducibility.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, env = "QUEPP_OUT_DIR")]
    out: Option<PathBuf>,
    /// Continue without ensemble circuits the backend cannot execute.
    #[arg(long)]
    allow_partial: bool,
    /// Exact noisy expectations instead of sampled shots.
    #[arg(long)]
    infinite_shots: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Result files (`quepp.json` or `cpt.json`).
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, env = "QUEPP_OUT_DIR", default_value = "quepp-out")]
    out: PathBuf,
    /// Merge files produced with different seeds.
    #[arg(long)]
    force: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        RunConfig::load(&self.config)?.resolve(&Overrides {
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            allow_partial: self.allow_partial,
            infinite_shots: self.infinite_shots,
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    let written = match cli.command {
        Command::Generate(a) => commands::cmd_generate(&a.resolve()?)?,
        Command::Cpt(a) => commands::cmd_cpt(&a.resolve()?)?,
        Command::Sample(a) => commands::cmd_sample(&a.resolve()?)?,
        Command::Quepp(a) => commands::cmd_quepp(&a.resolve()?)?,
        Command::Report(a) => {
            print!("{}", report::cmd_report(&a.files, &a.out, a.force)?);
            a.out
        }
    };
    eprintln!("wrote {}", written.display());
    Ok(())
}

fn is_capability(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let backend = c.downcast_ref::<BackendError>().or_else(|| {
            c.downcast_ref::<PipelineError>()
                .and_then(PipelineError::backend_error)
        });
        matches!(backend, Some(BackendError::Capability { .. }))
    })
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<ConfigError>()) {
        2
    } else if is_capability(e) {
        3
    } else if e.chain().any(|c| c.is::<InternalError>()) {
        4
    } else {
        1
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
