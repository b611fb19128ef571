//! Experiment harness: configuration, deterministic runs, CSV tables and a
//! JSON run summary with pass/fail status per check.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::output::{Check, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] fraclap_core::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Outcome of a completed run.
#[derive(Debug)]
pub struct RunReport {
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Worker count from `FRACLAP_WORKERS`; `None` leaves the rayon default.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("FRACLAP_WORKERS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "FRACLAP_WORKERS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn provenance(cfg: &ExperimentConfig) -> Vec<String> {
    let spec = cfg.spec().map(|s| s.to_string()).unwrap_or_default();
    vec![
        format!("fraclap {}", env!("CARGO_PKG_VERSION")),
        format!("experiment: {}", cfg.experiment.name()),
        format!("operator: {spec}"),
        format!(
            "grid: a = {}, b = {}, n_interior = {}",
            output::num(cfg.a),
            output::num(cfg.b),
            cfg.n_interior
        ),
        format!("seed: {}", cfg.seed),
    ]
}

/// Validates `cfg`, runs the experiment on a pool of `workers` threads and
/// writes its CSV tables and `summary.json` into `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let outcome = pool.install(|| experiments::dispatch(cfg))?;

    let dir: &Path = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let prov = provenance(cfg);
    let mut files = Vec::new();
    for t in &outcome.tables {
        t.write(dir, &prov)?;
        files.push(t.file.clone());
    }
    let summary = Summary {
        config: cfg,
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        operator: cfg.spec()?.to_string(),
        files: files.clone(),
        checks: &outcome.checks,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    summary.write(dir)?;
    Ok(RunReport {
        checks: outcome.checks,
        files,
    })
}
