//! Config-driven experiment runner for `prescurv-core`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use prescurv_core::Error;

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

pub use config::Config;
pub use output::Output;

/// Exit code for configuration and validation errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numeric and solver failures.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_)
            | Error::GridMismatch(_)
            | Error::OutOfRange(_)
            | Error::InvalidForcing(_)
            | Error::InsufficientDirections { .. }
            | Error::PenaltyBelowThreshold { .. }
            | Error::NonPeriodic
            | Error::GridTooLarge { .. }
            | Error::Format(_) => CliError::Config(e.to_string()),
            Error::Io(io) => CliError::Io(io.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::from_core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "prescurv", version, about = "Graph-cut experiments for prescribed-curvature functionals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML); defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Smaller grids and fewer samples.
    #[arg(long, global = true)]
    pub quick: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One constrained, penalized or unconstrained solve.
    Solve,
    /// Isovolumetric curve with derivative, scaling and subadditivity reports.
    Sweep,
    /// Divergence potential, `Λ*` and sandwich constants of the forcing.
    CheckG,
    /// Surface tension sampling and its Wulff shape.
    Wulff,
    /// Convergence of rescaled minimizers to the Wulff shape.
    Asym,
    /// Two-bump example with a kink in the isovolumetric curve.
    ExampleNondiff,
    /// Oracle equivalence and invariant suite.
    OracleVerify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::CheckG => "check-g",
            Command::Wulff => "wulff",
            Command::Asym => "asym",
            Command::ExampleNondiff => "example-nondiff",
            Command::OracleVerify => "oracle-verify",
        }
    }
}

/// Settings shared by every subcommand after flags are merged into the config.
#[derive(Clone, Debug)]
pub struct Run {
    pub command: Command,
    pub config: Config,
    pub out: PathBuf,
    pub quick: bool,
}

impl Run {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut config = match &cli.config {
            Some(p) => Config::load(p)?,
            None => Config::parse("")?,
        };
        if let Some(s) = cli.seed {
            config.seed = s;
        }
        let out =
            cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(&config.run_id));
        Ok(Self { command: cli.command, config, out, quick: cli.quick })
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("prescurv {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let run = Run::from_cli(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Numeric(e.to_string()))?;
    pool.install(|| commands::dispatch(&run))
}
