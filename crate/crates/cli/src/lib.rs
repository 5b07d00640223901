//! Scenario drivers behind the `viscofem` binary.

pub mod config;
mod scenarios;

use std::path::PathBuf;

pub use config::{RunConfig, Scenario};
pub use scenarios::run_scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(viscofem::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<viscofem::Error> for CliError {
    fn from(e: viscofem::Error) -> Self {
        use viscofem::Error as E;
        match e {
            e if e.is_solver_failure() => CliError::Solver(e),
            E::Io(_) | E::Csv(_) | E::Format { .. } => CliError::Io(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Resolved command line.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub scenario: Scenario,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub long: bool,
}

/// Reads the config, runs the scenario in a pool of the requested size and
/// returns the files written.
pub fn run(inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&inv.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", inv.config.display())))?;
    let config = RunConfig::parse(&text)?;
    config.check(inv.scenario)?;
    let out = inv
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    std::fs::create_dir_all(&out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = inv.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_scenario(inv.scenario, &config, &out, inv.long))
}
