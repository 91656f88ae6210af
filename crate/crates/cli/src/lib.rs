//! Command-line front end: load a scenario, solve ETA gaps, run simulations,
//! and write CSV tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible corridor,
//! 4 internal assertion failure.

pub mod commands;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eta_gap::{CorridorError, Mode, SimError, SolveError};
use thiserror::Error;

pub use commands::{gap_rows, simulate_runs, RunOutput};
pub use scenario::ScenarioFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible corridor: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<CorridorError> for CliError {
    fn from(e: CorridorError) -> Self {
        if e.is_infeasible() {
            CliError::Infeasible(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Bound(_) | SolveError::CertificateViolation { .. } => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NonFinite { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

const CSV_HELP: &str = "\
Output files (fixed column order, full precision):
  gap_table.csv         safe_d_m,gap_s,continuous_gap_s,trivial_bound_s,solve_time_s
  metrics.csv           safe_d_m,mode,gap_s,entered,safe_arrivals,collisions,min_separation_m,arrival_rate,throughput
  traj_<mode>_<d>.csv   time_s,vehicle_id,position_m,speed_mps,accel_mps2,section_index
  bounds_<kind>.csv     time_s,position_m

Exit codes: 0 success, 2 config error, 3 infeasible corridor, 4 internal assertion.";

#[derive(Debug, Parser)]
#[command(name = "eta-gap", version, about = "Safe ETA gaps for speed-limited corridors", after_help = CSV_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the minimum ETA gap for every safe distance.
    Gap(GapArgs),
    /// Simulate the corridor with and/or without ETA-gap admission.
    Simulate(SimulateArgs),
    /// Gap table plus both simulation modes for every safe distance, in parallel.
    Sweep(SweepArgs),
    /// Check a scenario and print the derived travel times.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON. Defaults to the bundled reference corridor.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Safe distances in meters, comma separated. Overrides the scenario list.
    #[arg(long = "safe-d", value_delimiter = ',')]
    pub safe_d: Vec<f64>,
    /// Output directory. Overrides the scenario's.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ETA error bound in seconds; the gap is widened by twice this.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the effective scenario to <out>/scenario.json.
    #[arg(long)]
    pub dump_config: bool,
    /// Also write the extreme trajectories of a vehicle entering at t = 0.
    #[arg(long)]
    pub bounds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Eta,
    NoEta,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Eta => vec![Mode::Eta],
            ModeArg::NoEta => vec![Mode::NoEta],
            ModeArg::Both => vec![Mode::Eta, Mode::NoEta],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,
    /// Count only arrivals completed by this time (seconds).
    #[arg(long)]
    pub count_by: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Count only arrivals completed by this time (seconds).
    #[arg(long)]
    pub count_by: Option<f64>,
    /// Also write per-run trajectory logs.
    #[arg(long)]
    pub trajectories: bool,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("eta-gap: {e}");
            e.exit_code()
        }
    }
}
