//! `pdscbf`: simulate projected and barrier-filtered dynamics, sweep the
//! barrier gain, estimate perturbation constants, and verify the analytic
//! certificates numerically.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 runtime
//! (integration/estimation) error, 4 verification failure.

mod commands;
mod manifest;
mod svg;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    Verification(String),
}

impl CliError {
    fn config(e: pdscbf_core::Error) -> Self {
        CliError::Config(e.to_string())
    }

    fn runtime(e: pdscbf_core::Error) -> Self {
        // Errors raised while executing a validated configuration.
        CliError::Runtime(e.to_string())
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) | CliError::Verification(m) => m,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "pdscbf",
    version,
    about = "Projected dynamical systems and their barrier-based continuous approximations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate {
        /// Built-in scenario name (feedback-opt, synchronverter,
        /// saturating-1d, disk-rotation, gradient-flow-nonconvex).
        #[arg(long)]
        scenario: Option<String>,
        /// JSON scenario config (alternative to --scenario).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Field kind: nominal, pds or cbf.
        #[arg(long)]
        kind: String,
        /// Barrier gain, required for --kind cbf.
        #[arg(long)]
        alpha: Option<f64>,
        /// Output CSV path (a .manifest.json is written next to it).
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
        /// Reserved; all sampling is deterministic regardless.
        #[arg(long, hide = true)]
        seedless: bool,
    },
    /// Sweep the barrier gain against the projected reference.
    Sweep {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated gains; defaults to the scenario grid.
        #[arg(long)]
        alphas: Option<String>,
        /// Output directory for JSON, CSV, SVG and the manifest.
        #[arg(long, default_value = "sweep-out")]
        out_dir: PathBuf,
        #[arg(long, hide = true)]
        seedless: bool,
    },
    /// Estimate the perturbation constants and write the report as JSON.
    Bounds {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Lattice points per dimension (defaults by state dimension).
        #[arg(long)]
        grid_res: Option<usize>,
        #[arg(long, default_value = "bounds.json")]
        out: PathBuf,
        #[arg(long, hide = true)]
        seedless: bool,
    },
    /// Run the numeric checks (gradients, oracles, certificates); exits 4 on
    /// any failure.
    Verify {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        grid_res: Option<usize>,
        #[arg(long, hide = true)]
        seedless: bool,
    },
}

fn configure_threads() -> CliResult<()> {
    if let Ok(raw) = std::env::var("PDSCBF_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| CliError::Config(format!("PDSCBF_THREADS must be a positive integer, got '{raw}'")))?;
        if n == 0 {
            return Err(CliError::Config("PDSCBF_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool setup failed: {e}")))?;
    }
    Ok(())
}

fn run() -> CliResult<()> {
    configure_threads()?;
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate {
            scenario,
            config,
            kind,
            alpha,
            out,
            ..
        } => commands::cmd_simulate(scenario, config, kind, *alpha, out),
        Command::Sweep {
            scenario,
            config,
            alphas,
            out_dir,
            ..
        } => commands::cmd_sweep(scenario, config, alphas, out_dir),
        Command::Bounds {
            scenario,
            config,
            grid_res,
            out,
            ..
        } => commands::cmd_bounds(scenario, config, *grid_res, out),
        Command::Verify {
            scenario,
            config,
            grid_res,
            ..
        } => commands::cmd_verify(scenario, config, *grid_res),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(err) = run() {
        eprintln!("error: {}", err.message());
        std::process::exit(err.exit_code());
    }
}
