mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "urnmix",
    version,
    about = "Mixing of Bernoulli-Laplace urn chains"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Irreducible constituents with dimensions, multiplicities and eigenvalues (CSV).
    Catalog(ModelArgs),
    /// Spectral upper-bound curve and step counts (CSV).
    Bounds(BoundsArgs),
    /// Exact distances to uniformity by full evolution (CSV).
    Exact(ExactArgs),
    /// Monte Carlo walkers (JSON summary).
    Simulate(SimulateArgs),
    /// Run the built-in consistency checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// classical, variant, independent or paired.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, conflicts_with = "k_grid")]
    k: Option<u64>,
    /// Step grid `start:end:step`, inclusive.
    #[arg(long)]
    k_grid: Option<String>,
    #[arg(long, conflicts_with_all = ["c_grid", "k", "k_grid"])]
    c: Option<f64>,
    /// Grid of `c` values `start:end:step`, inclusive.
    #[arg(long, conflicts_with_all = ["k", "k_grid"])]
    c_grid: Option<String>,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, conflicts_with = "k_grid")]
    k: Option<u64>,
    #[arg(long)]
    k_grid: Option<String>,
    /// Exact rational arithmetic (small spaces only).
    #[arg(long)]
    rational: bool,
    /// Also write the distribution at the last grid point as `rank,probability` CSV.
    #[arg(long)]
    distribution: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    walkers: u64,
    #[arg(long, env = "URNMIX_SEED")]
    seed: u64,
    /// Dump terminal states in the binary record format.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    level: LevelArg,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Perturb every catalog to check that the suite notices.
    #[arg(long, hide = true)]
    perturb_catalog: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
