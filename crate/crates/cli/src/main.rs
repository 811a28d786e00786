//! `spatial-captcha`: generate datasets, calibrate difficulty, score response logs,
//! and serve challenges.
//!
//! Exit codes: 0 success, 1 invalid input, 2 infeasible cell, 3 I/O failure.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

const ENV_HELP: &str = "\
Environment (serve):
  PORT          listen port
  POOL_SIZE     instances generated when no dataset is given
  TTL_SECONDS   session lifetime
  DATASET_DIR   dataset to serve
  ADMIN_TOKEN   bearer token enabling /v1/admin routes
Exit codes: 0 ok, 1 invalid input, 2 infeasible cell, 3 I/O failure.";

#[derive(Debug, Parser)]
#[command(name = "spatial-captcha", version, about = "Spatial reasoning challenge toolkit", after_help = ENV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a dataset.
    Gen(GenArgs),
    /// Simulated pilot responses for a dataset, as CSV.
    SimulatePilot(SimulateArgs),
    /// Fit a difficulty model from pilot responses.
    Calibrate(CalibrateArgs),
    /// Uniform random responses for a dataset, as JSON lines.
    RandomSolver(RandomArgs),
    /// Score a JSON-lines response log.
    Eval(EvalArgs),
    /// Run the challenge service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct ManifestArgs {
    /// Manifest file, or the name of a shipped manifest; all shipped manifests by default.
    #[arg(long = "manifest")]
    manifests: Vec<String>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    manifests: ManifestArgs,
    /// Instances per manifest.
    #[arg(long, default_value_t = 150)]
    count: usize,
    /// Batch-wide bin counts `easy,medium,hard`, split over manifests; needs --model.
    #[arg(long)]
    mix: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Also write PNG copies of the panels.
    #[arg(long)]
    png: bool,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Creation time stamped on every instance (unix seconds); now by default.
    #[arg(long)]
    created_at: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    manifests: ManifestArgs,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Respondents per instance.
    #[arg(long)]
    respondents: Option<usize>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    manifests: ManifestArgs,
    #[arg(long)]
    pilot: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Weight of latency against error rate.
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Smooth the latency step functions.
    #[arg(long)]
    smooth: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RandomArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// `sampled` (k independent runs) or `ranked` (one top-k list).
    #[arg(long, default_value = "sampled")]
    semantics: String,
    /// Directory for report.json and the CSV exports.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// TOML service config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    host: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    state_dir: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::SimulatePilot(a) => commands::simulate_pilot(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::RandomSolver(a) => commands::random_solver(a),
        Command::Eval(a) => commands::eval(a),
        Command::Serve(a) => commands::serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
