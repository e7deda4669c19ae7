//! `stepleak` — lower bounds and estimators for the change time of a step
//! input driving a noisy discrete-time LTI system.
//!
//! Subcommands: `bound`, `estimate`, `simulate`, `montecarlo`, `sweep`.
//! Exit codes: 0 success, 2 configuration/input error, 3 numeric-domain
//! error (for example sigma2 = 0 or k* >= N). The environment variable
//! `PRIVACY_HCR_THREADS` caps internal parallelism; outputs are
//! byte-identical at any thread count.

mod commands;
mod config;
mod io;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input (exit code 2).
    Config(String),
    /// Numerically undefined request (exit code 3).
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<stepleak::Error> for CliError {
    fn from(e: stepleak::Error) -> Self {
        match e {
            stepleak::Error::NumericDomain(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "stepleak",
    version,
    about = "Lower bounds and estimators for the change time of a step input \
             in a noisy discrete-time LTI system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the variance lower bound for a model and scenario
    Bound(BoundArgs),
    /// Estimate the change time and amplitude from a measurement CSV
    Estimate(EstimateArgs),
    /// Simulate a measurement series and write it as CSV
    Simulate(SimulateArgs),
    /// Run a seeded Monte Carlo ensemble of the estimator
    Montecarlo(MonteCarloArgs),
    /// Sweep one parameter (sigma2 | a | dt | N) and tabulate the bound
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Path to the JSON model file
    #[arg(long)]
    model: String,
    /// Change time k* in samples (overrides the model file)
    #[arg(long = "k-star")]
    k_star: Option<usize>,
    /// Horizon N in samples (overrides the model file)
    #[arg(long)]
    horizon: Option<usize>,
    /// Override the model's noise variance
    #[arg(long)]
    sigma2: Option<f64>,
    /// Override the model's sampling interval in minutes
    #[arg(long)]
    dt: Option<f64>,
    /// Step amplitude (overrides the model file; default 1)
    #[arg(long)]
    amplitude: Option<f64>,
}

impl ModelArgs {
    fn overrides(&self) -> config::Overrides {
        config::Overrides {
            k_star: self.k_star,
            horizon: self.horizon,
            sigma2: self.sigma2,
            dt: self.dt,
            amplitude: self.amplitude,
        }
    }
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the shift-information profile CSV here
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Measurement CSV to ingest (header `k,y`)
    #[arg(long)]
    data: String,
    /// Amplitude handling: `ls` (least squares) or `fixed:VALUE`
    #[arg(long, default_value = "ls")]
    mode: String,
    /// Also score the no-change hypothesis
    #[arg(long)]
    include_null: bool,
    /// Clamp least-squares amplitudes into [0, 1]
    #[arg(long)]
    clamp_unit: bool,
    /// Write the per-candidate residual table CSV here
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Add seeded Gaussian measurement noise
    #[arg(long)]
    noisy: bool,
    /// RNG seed for --noisy
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the measurement CSV here (stdout if omitted)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of trials
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Master seed; trial i uses an independent derived substream
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Amplitude handling: `ls` (least squares) or `fixed:VALUE`
    #[arg(long, default_value = "ls")]
    mode: String,
    /// Write the estimate histogram CSV here
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Grid spec: param:start:stop:steps (inclusive linear grid) or
    /// param:v1,v2,... with param one of sigma2 | a | dt | N
    #[arg(long)]
    sweep: String,
    /// Also run a Monte Carlo ensemble per grid point
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed for per-point ensembles
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the sweep table CSV here (stdout if omitted)
    #[arg(long)]
    out: Option<String>,
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Bound(args) => commands::bound(args),
        Command::Estimate(args) => commands::estimate(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Montecarlo(args) => commands::montecarlo(args),
        Command::Sweep(args) => commands::sweep(args),
    }
}

/// Builds a bounded rayon pool when PRIVACY_HCR_THREADS is set; all work
/// then runs inside it, capping every parallel section in the process.
fn thread_pool_from_env() -> Result<Option<rayon::ThreadPool>, CliError> {
    match std::env::var("PRIVACY_HCR_THREADS") {
        Ok(raw) => {
            let threads: usize = raw.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "PRIVACY_HCR_THREADS must be a positive integer, found `{raw}`"
                ))
            })?;
            if threads == 0 {
                return Err(CliError::Config(
                    "PRIVACY_HCR_THREADS must be at least 1".to_string(),
                ));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
            Ok(Some(pool))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => Err(CliError::Config(
            "PRIVACY_HCR_THREADS is not valid unicode".to_string(),
        )),
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match thread_pool_from_env() {
        Ok(Some(pool)) => pool.install(|| dispatch(&cli)),
        Ok(None) => dispatch(&cli),
        Err(e) => Err(e),
    };
    if let Err(e) = outcome {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
