use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fkmc_cli::{load_config, run, CliError, Experiment};

/// Monte Carlo Feynman-Kac experiments.
#[derive(Parser)]
#[command(name = "fkmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate Q(x, y; V, t) at one endpoint pair
    QEstimate(RunArgs),
    /// Estimate <phi, exp(-tH) psi> through the path integral
    MatrixElement(RunArgs),
    /// Check the a priori bound on a grid of endpoints
    BoundSweep(RunArgs),
    /// Follow V_n = max(V, -n) on both sides of the path-integral identity
    TruncationStudy(RunArgs),
    /// Functional-calculus convergence demo on matrices
    #[command(name = "theorem31-demo")]
    Theorem31Demo(RunArgs),
    /// Compare Monte Carlo, grid and closed-form semigroups
    OracleCrosscheck(RunArgs),
    /// Rerun Q over a schedule of time steps on common paths
    RefineSteps(RunArgs),
    /// Validate a configuration file without running it
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_path` from the configuration
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `workers` from the configuration
    #[arg(long)]
    workers: Option<usize>,
}

fn run_command(experiment: Experiment, args: RunArgs) -> Result<String, CliError> {
    let mut cfg = load_config(&args.config)?;
    if cfg.experiment != experiment {
        return Err(CliError::Config(vec![format!(
            "configuration declares experiment {} but the subcommand is {experiment}",
            cfg.experiment
        )]));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(output) = args.output {
        cfg.output_path = output;
    }
    if let Some(workers) = args.workers {
        if workers == 0 {
            return Err(CliError::Config(vec!["--workers must be positive".into()]));
        }
        cfg.workers = workers;
    }
    run(&cfg).map(|(summary, _)| summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => load_config(&config)
            .map(|c| format!("valid: experiment {}, output {}", c.experiment, c.output_path.display())),
        Command::QEstimate(a) => run_command(Experiment::QEstimate, a),
        Command::MatrixElement(a) => run_command(Experiment::MatrixElement, a),
        Command::BoundSweep(a) => run_command(Experiment::BoundSweep, a),
        Command::TruncationStudy(a) => run_command(Experiment::TruncationStudy, a),
        Command::Theorem31Demo(a) => run_command(Experiment::Theorem31Demo, a),
        Command::OracleCrosscheck(a) => run_command(Experiment::OracleCrosscheck, a),
        Command::RefineSteps(a) => run_command(Experiment::RefineSteps, a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
