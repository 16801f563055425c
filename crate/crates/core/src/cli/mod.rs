//! Command-line front end.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Context};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "potstab", version, about = "Optimal potentials and stability of Schrödinger energies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the state equation for the configured potential and source.
    Energy(CommonArgs),
    /// Compute the optimal potentials and their constants.
    Optimize(CommonArgs),
    /// Run the randomized stability and inequality sweeps.
    Verify(CommonArgs),
    /// Radial decay study of the semilinear problem.
    Decay(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep seed; overrides `sweep.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Record wall time per row in the `ms` column.
    #[arg(long)]
    pub timing: bool,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Energy(a) | Command::Optimize(a) | Command::Verify(a) | Command::Decay(a) => a,
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a verification failed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let args = cli.command.args();
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.sweep.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    commands::prepare(&out)?;
    let ctx = Context { config, out, timing: args.timing };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    pool.install(|| match cli.command {
        Command::Energy(_) => commands::energy(&ctx),
        Command::Optimize(_) => commands::optimize(&ctx),
        Command::Verify(_) => commands::verify(&ctx),
        Command::Decay(_) => commands::decay(&ctx),
    })
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see the report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
