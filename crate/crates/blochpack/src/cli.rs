//! Argument parsing and dispatch.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::commands::{cmd_grid, cmd_ims, cmd_project, cmd_variance, cmd_zeropack};
use crate::config::{ConfigError, RunConfig};
use crate::output::{write_json, write_manifest};
use crate::verify::run_verify;

#[derive(Debug, Parser)]
#[command(name = "blochpack", version, about = "Bergman projections, Bloch-space functionals and hyperbolic zero packing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, env = "BLOCHPACK_THREADS")]
    pub threads: Option<usize>,
    /// Absolute and relative quadrature tolerance (overrides `quadrature`).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// P mu, (P mu)' and N_g on a polar grid.
    Project,
    /// Integral means and growth-exponent fits.
    Ims,
    /// Asymptotic-variance curves and the partition-sum identity.
    Variance,
    /// Optimized zero-packing ratios over degrees and levels.
    Zeropack,
    /// The annulus/box grid.
    Grid,
    /// Runs the invariant suite; exit code 1 if any check fails.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Project => "project",
            Command::Ims => "ims",
            Command::Variance => "variance",
            Command::Zeropack => "zeropack",
            Command::Grid => "grid",
            Command::Verify => "verify",
        }
    }
}

/// The effective configuration: file (or defaults) plus flag overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.quadrature.abs_tol = tol;
        cfg.quadrature.rel_tol = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command; `Ok(false)` means verification failed.
pub fn execute(command: Command, cfg: &RunConfig, threads: usize) -> Result<bool> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building the thread pool")?;
    let out = &cfg.output.dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    pool.install(|| {
        let (files, ok) = match command {
            Command::Project => (cmd_project(cfg, out)?, true),
            Command::Ims => (cmd_ims(cfg, out)?, true),
            Command::Variance => (cmd_variance(cfg, out)?, true),
            Command::Zeropack => (cmd_zeropack(cfg, out)?, true),
            Command::Grid => (cmd_grid(cfg, out)?, true),
            Command::Verify => {
                let report = run_verify(cfg)?;
                for c in report.checks.iter().filter(|c| !c.passed) {
                    eprintln!("FAILED {}: value {} bound {} {}", c.name, c.value, c.bound, c.detail);
                }
                (vec![write_json(out, "verify.json", &report)?], report.passed)
            }
        };
        write_manifest(out, command.name(), cfg, threads, &files)?;
        Ok(ok)
    })
}

pub fn main_with(cli: Cli) -> ExitCode {
    let cfg = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let threads = if threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        threads
    };
    match execute(cli.command, &cfg, threads) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
