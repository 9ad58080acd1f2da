//! Command-line front end: configuration ingestion, problem assembly,
//! execution and result files.

pub mod commands;
pub mod config;
pub mod error;
pub mod schrodinger;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{parse_config, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gamma-solve", version, about = "Spectral solvers for time-harmonic linear physics on periodic grids")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every randomized field.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker thread cap.
    #[arg(long, global = true, env = "GAMMA_SOLVE_THREADS")]
    pub threads: Option<usize>,
    /// Relative residual tolerance (overrides the config).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a periodic problem; writes E.uplf, J.uplf, summary.json and residual_history.csv.
    Solve,
    /// Effective tensors of a quasiperiodic problem; writes effective.json.
    Effective,
    /// Effective-mass or Love-wave scans as CSV.
    Dispersion(DispersionArgs),
    /// First-order perturbation of a discrete Schrödinger state.
    Schrodinger,
    /// Apply Γ₁ or Γ₂ to a UPLF field.
    Project(ProjectArgs),
    /// Run the built-in self-check suite.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Effmass,
    Love,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// `start:stop:steps`; frequency for effmass, `k₁` for love.
    #[arg(long)]
    pub scan: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub bar_mass: f64,
    #[arg(long, default_value_t = 1)]
    pub cavities: usize,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spring: f64,
    /// Imaginary part of the spring constant; negative means damped.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub spring_im: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho1: f64,
    #[arg(long, default_value_t = 4.0)]
    pub mu2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho2: f64,
    #[arg(long, default_value_t = 6.0)]
    pub omega: f64,
    /// Grid points across the periodic cell.
    #[arg(long, default_value_t = 256)]
    pub points: usize,
    /// Cell length; defaults to `4h`.
    #[arg(long)]
    pub cell: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProjectorKind {
    Helmholtz,
    Maxwell,
    FirstIndex,
    Brinkman,
    Thermoacoustic,
    Love,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Input UPLF field.
    #[arg(long, value_name = "PATH")]
    pub field: PathBuf,
    #[arg(long, value_enum)]
    pub projector: ProjectorKind,
    /// Apply `Γ₂ = I - Γ₁` instead of `Γ₁`.
    #[arg(long)]
    pub complement: bool,
    /// Horizontal wavenumber for the love projector.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub k1: f64,
}

/// Runs one command; `Ok` means exit status 0.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::usage(format!("--tol {t} must lie in (0, 1)")));
        }
    }
    match &cli.command {
        Command::Solve => commands::solve(cli),
        Command::Effective => commands::effective(cli),
        Command::Dispersion(a) => commands::dispersion(cli, a),
        Command::Schrodinger => schrodinger::run(cli),
        Command::Project(a) => commands::project(cli, a),
        Command::Verify => commands::verify(cli),
    }
}
