use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fraclap_cli::config::{Experiment, ExperimentConfig, OperatorName, Overrides};
use fraclap_cli::output::Status;
use fraclap_cli::{run, workers_from_env, CliError};

/// Numerical experiments for nonlocal Dirichlet problems on an interval.
///
/// Values from --config override the built-in defaults; flags override both.
#[derive(Debug, Parser)]
#[command(name = "fraclap", version)]
struct Args {
    /// Experiment to run; overrides the `experiment` key of the config file.
    #[arg(value_enum)]
    experiment: Option<Experiment>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    operator: Option<OperatorName>,
    #[arg(long)]
    s: Option<f64>,
    /// Number of interior nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated data exponents.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    /// Comma-separated concentration indices.
    #[arg(long, value_delimiter = ',')]
    j: Option<Vec<u32>>,
    /// Comma-separated strip widths.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn config(args: Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(Overrides {
        experiment: args.experiment,
        operator: args.operator,
        s: args.s,
        n_interior: args.n,
        beta: args.beta,
        j: args.j,
        eta: args.eta,
        output_dir: args.out,
        seed: args.seed,
    });
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = config(args).and_then(|cfg| {
        let workers = workers_from_env()?;
        run(&cfg, workers).map(|r| (cfg, r))
    });
    match result {
        Ok((cfg, report)) => {
            for c in &report.checks {
                let tag = match c.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::Recorded => "rec ",
                };
                println!("{tag}  {}  value={:e}", c.name, c.value);
            }
            println!("wrote {} files to {}", report.files.len() + 1, cfg.output_dir.display());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("fraclap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
