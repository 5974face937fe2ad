//! Experiment runner: strict TOML configuration in, CSV tables out.
//!
//! Scientific findings (a failed bound check, a divergence flag) are part of
//! the output and never an error. Errors are configuration problems, I/O
//! failures and numerical breakdowns, each with its own exit status.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{parse_config, validate_config, Experiment, ExperimentConfig};
pub use experiments::{execute, Outcome, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<fkmc::Error> for CliError {
    fn from(e: fkmc::Error) -> Self {
        match e {
            fkmc::Error::Numerical(msg) => CliError::Numerical(msg),
            other => CliError::Config(vec![other.to_string()]),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(CliError::Config)
}

pub fn write_table(table: &Table) -> Result<(), CliError> {
    let io_err = |e: &dyn std::fmt::Display| CliError::Io(format!("cannot write {}: {e}", table.path.display()));
    let mut w = csv::Writer::from_path(&table.path).map_err(|e| io_err(&e))?;
    w.write_record(table.header).map_err(|e| io_err(&e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io_err(&e))?;
    }
    w.flush().map_err(|e| io_err(&e))
}

/// Runs the experiment on a pool of `config.workers` threads and writes
/// its tables. Returns the summary line and the files written.
pub fn run(config: &ExperimentConfig) -> Result<(String, Vec<PathBuf>), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| execute(config))?;
    let mut written = Vec::new();
    for table in &outcome.tables {
        write_table(table)?;
        written.push(table.path.clone());
    }
    Ok((outcome.summary, written))
}
