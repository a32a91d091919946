//! Command-line front end for the exceedance testing toolkit.
//!
//! Subcommands: `are-curve`, `power`, `size`, `lan-check`, `simulate`,
//! `validate-generator`.  Experiments are described by a TOML config (see
//! the repository's `configs/` directory); `--seed`, `--replications`,
//! and `--n` override the corresponding config fields.
//!
//! Exit codes: 0 all checks passed, 1 scientific tolerance failure,
//! 2 configuration error, 3 I/O error.

mod commands;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Errors carrying their exit-code class.
#[derive(Debug)]
pub enum CmdError {
    /// Scientific failure while computing (exit 1).
    Scientific(String),
    /// Configuration or model-validity problem (exit 2).
    Config(String),
    /// Filesystem problem (exit 3).
    Io(String),
}

impl From<gpptest::Error> for CmdError {
    fn from(e: gpptest::Error) -> Self {
        match &e {
            gpptest::Error::InvalidConfig(_)
            | gpptest::Error::InvalidModel(_)
            | gpptest::Error::Domain(_) => CmdError::Config(e.to_string()),
            gpptest::Error::Evaluation(_)
            | gpptest::Error::NoExceedances(_)
            | gpptest::Error::QuadratureNoConvergence { .. } => CmdError::Scientific(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gpptest",
    version,
    about = "Simulation and hypothesis tests for exceedances of generalized Pareto processes",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the config-driven subcommands.
#[derive(Args, Debug)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Result file; a run manifest is written alongside it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Cap the worker-thread count (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Override the config's replication count.
    #[arg(long, value_name = "N")]
    replications: Option<usize>,
    /// Override the config's observations per replication.
    #[arg(long, value_name = "N")]
    n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AreCurveArgs {
    /// Lower end of the roughness grid.
    #[arg(long, default_value_t = 0.0)]
    delta_min: f64,
    /// Upper end of the roughness grid.
    #[arg(long, default_value_t = 1.0)]
    delta_max: f64,
    /// Number of grid points (endpoints included).
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// CSV output path (columns: delta, psi, are).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Cap the worker-thread count (accepted for interface uniformity).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the relative efficiency of the omnibus test against the
    /// optimal test over a roughness grid.
    AreCurve(AreCurveArgs),
    /// Estimate rejection rates over the configured (xi, test) grid and
    /// compare them with asymptotic power predictions.
    Power(RunArgs),
    /// Estimate test sizes: `power` with the local parameter forced to 0.
    Size(RunArgs),
    /// Check empirical log-likelihood-ratio moments against the predicted
    /// normal limit (JSON report).
    LanCheck(RunArgs),
    /// Export simulated exceedance data as CSV.
    Simulate(RunArgs),
    /// Validate a generator specification (exit 1 on scientific
    /// violations such as a vanishing infimum).
    ValidateGenerator(RunArgs),
}

impl Command {
    fn threads_flag(&self) -> Option<usize> {
        match self {
            Command::AreCurve(a) => a.threads,
            Command::Power(a)
            | Command::Size(a)
            | Command::LanCheck(a)
            | Command::Simulate(a)
            | Command::ValidateGenerator(a) => a.threads,
        }
    }
}

fn dispatch(command: &Command, threads: usize) -> Result<bool, CmdError> {
    match command {
        Command::AreCurve(args) => commands::cmd_are_curve(args, threads),
        Command::Power(args) => commands::cmd_power(args, threads, false),
        Command::Size(args) => commands::cmd_power(args, threads, true),
        Command::LanCheck(args) => commands::cmd_lan_check(args, threads),
        Command::Simulate(args) => commands::cmd_simulate(args, threads),
        Command::ValidateGenerator(args) => commands::cmd_validate_generator(args, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(threads) = cli.command.threads_flag() {
            if threads == 0 {
                eprintln!("error: --threads must be at least 1");
                return ExitCode::from(2);
            }
            builder = builder.num_threads(threads);
        }
        match builder.build() {
            Ok(pool) => pool,
            Err(e) => {
                eprintln!("error: cannot build the worker pool: {e}");
                return ExitCode::from(3);
            }
        }
    };
    let threads = pool.current_num_threads();
    match pool.install(|| dispatch(&cli.command, threads)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed tolerance; see the report output");
            ExitCode::from(1)
        }
        Err(CmdError::Scientific(msg)) => {
            eprintln!("scientific failure: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}
