//! Batch front end for the two-atom cavity entanglement simulator.
//!
//! Subcommands execute single protocol runs, parameter sweeps and the
//! physical-units report, reading a sectioned key-value configuration file
//! and writing machine-readable JSON or CSV. Exit codes: 0 on success, 2 for
//! configuration errors, 3 when a propagator fails its convergence check.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use qutrit_cavity::analysis::{detuning_sweep, fock_convergence, kappa_sweep, timing_sweep};
use qutrit_cavity::protocol::run_protocol;

pub mod config;
pub mod output;

use config::{OutputFormat, RunConfig};
use output::SweepKind;

/// CLI failure carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Configuration, validation or I/O problem (exit 2).
    Config(String),
    /// A propagator did not reach its convergence tolerance (exit 3).
    Convergence(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Convergence(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qutrit_cavity::Error> for CliError {
    fn from(e: qutrit_cavity::Error) -> Self {
        match e {
            qutrit_cavity::Error::ConvergenceFailure { .. } => CliError::Convergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qutrit-cavity",
    version,
    about = "Simulate cavity-assisted collision entanglement of two three-level atoms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Execute one protocol run and write the result report.
    Run(IoArgs),
    /// Sweep the entry-time mismatch Δ and compare against the closed-form
    /// fidelity law.
    SweepTiming(SweepArgs),
    /// Sweep the detuning ratio δ_eg/g with the full unitary engine.
    SweepDetuning(SweepArgs),
    /// Sweep the cavity decay rate κ (1/s) with the Lindblad engine.
    SweepKappa(SweepArgs),
    /// Sweep the Fock cutoff n_max with the full unitary engine.
    Convergence(SweepArgs),
    /// Print derived times, rates and laboratory comparisons.
    Params(ParamsArgs),
}

#[derive(Args, Debug)]
pub struct IoArgs {
    /// Configuration file; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output path; '-' writes to stdout. Overrides the config file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format (json or csv). Overrides the config file.
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// First grid point.
    #[arg(long)]
    pub start: f64,
    /// Last grid point (inclusive).
    #[arg(long)]
    pub stop: f64,
    /// Number of grid points.
    #[arg(long)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Cavity length in meters, for the velocity estimate.
    #[arg(long, value_name = "METERS")]
    pub cavity_length: Option<f64>,
}

fn load_config(io: &IoArgs) -> Result<RunConfig, CliError> {
    match &io.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn resolve_format(io: &IoArgs, cfg: &RunConfig, default: OutputFormat) -> Result<OutputFormat, CliError> {
    if let Some(flag) = &io.format {
        return OutputFormat::parse(flag);
    }
    Ok(cfg.output_format.unwrap_or(default))
}

fn write_output(io: &IoArgs, cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    let path: &Path = io
        .out
        .as_deref()
        .unwrap_or_else(|| Path::new(&cfg.output_path));
    if path.as_os_str() == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::config(format!("cannot write to stdout: {e}")))
    } else {
        std::fs::write(path, text)
            .map_err(|e| CliError::config(format!("cannot write '{}': {e}", path.display())))
    }
}

/// Inclusive linear grid with `points` entries.
fn linspace(start: f64, stop: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points == 0 {
        return Err(CliError::config("--points must be at least 1"));
    }
    if stop < start {
        return Err(CliError::config("--stop must not be below --start"));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points).map(|k| start + step * k as f64).collect())
}

fn run_sweep(kind: SweepKind, args: &SweepArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.io)?;
    let base = cfg.to_protocol_config();
    let grid = linspace(args.start, args.stop, args.points)?;
    let rows = match kind {
        SweepKind::Timing => timing_sweep(&base, &grid)?,
        SweepKind::Detuning => detuning_sweep(&base, &grid)?,
        SweepKind::Kappa => kappa_sweep(&base, &grid)?,
        SweepKind::Convergence => {
            let n_maxes: Vec<usize> = grid
                .iter()
                .map(|&x| {
                    let n = x.round();
                    if n < 1.0 {
                        Err(CliError::config(format!(
                            "convergence grid point {x} is below the minimum cutoff 1"
                        )))
                    } else {
                        Ok(n as usize)
                    }
                })
                .collect::<Result<_, _>>()?;
            fock_convergence(&base, &n_maxes)?
        }
    };
    let text = match resolve_format(&args.io, &cfg, OutputFormat::Csv)? {
        OutputFormat::Csv => output::sweep_to_csv(kind, &rows),
        OutputFormat::Json => output::sweep_to_json(kind, &rows),
    };
    write_output(&args.io, &cfg, &text)
}

/// Execute a parsed command line. Errors carry the intended exit code.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(io) => {
            let cfg = load_config(io)?;
            let protocol_cfg = cfg.to_protocol_config();
            let result = run_protocol(&protocol_cfg)?;
            let text = match resolve_format(io, &cfg, OutputFormat::Json)? {
                OutputFormat::Json => output::run_to_json(&protocol_cfg, &result),
                OutputFormat::Csv => output::run_to_csv(&protocol_cfg, &result),
            };
            write_output(io, &cfg, &text)
        }
        Command::SweepTiming(args) => run_sweep(SweepKind::Timing, args),
        Command::SweepDetuning(args) => run_sweep(SweepKind::Detuning, args),
        Command::SweepKappa(args) => run_sweep(SweepKind::Kappa, args),
        Command::Convergence(args) => run_sweep(SweepKind::Convergence, args),
        Command::Params(args) => {
            let cfg = load_config(&args.io)?;
            if let Some(l) = args.cavity_length {
                if l <= 0.0 {
                    return Err(CliError::config("--cavity-length must be positive"));
                }
            }
            let text = output::params_to_json(&cfg.to_phys_params(), args.cavity_length);
            write_output(&args.io, &cfg, &text)
        }
    }
}
