//! `runs`: longest-run probabilities, run-vector laws and moments from the
//! command line.

mod commands;
mod fmt;
mod output;
mod query;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::{Format, OutputSpec};

#[derive(Debug, Parser)]
#[command(name = "runs", version, about = "Runs of heads in coin tossing: exact laws, moments and approximations")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Significant digits for floating-point output.
    #[arg(long, global = true, default_value_t = 15, value_parser = clap::value_parser!(u16).range(1..=17))]
    precision: u16,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tail probabilities P(L(n) ≥ ℓ) of the longest run, exact and approximate.
    Longest(LongestArgs),
    /// Curve data for the longest-run plots.
    Figure(FigureArgs),
    /// Exact law of R(n), G(n) or G_ℓ(n).
    Dist(DistArgs),
    /// Binomial moments of run counts.
    Moments(MomentsArgs),
    /// Run statistics stopped at an independent geometric time.
    Stopped(StoppedArgs),
    /// Monte Carlo estimate of E h(R(n)).
    Simulate(SimulateArgs),
    /// Roots of 1 - w + p^ℓ q w^{ℓ+1}.
    Roots(RootsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum MethodArg {
    Exact,
    Poisson,
    Root,
}

#[derive(Debug, Args)]
pub struct LongestArgs {
    /// Sequence lengths: a list and/or inclusive ranges, e.g. `5..20,100`.
    #[arg(long, default_value = "10000")]
    pub n: String,
    /// Coin bias as a decimal or a ratio `a/b`.
    #[arg(long, default_value = "1/2")]
    pub p: String,
    /// Run lengths, same syntax as `--n`.
    #[arg(long)]
    pub ell: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact,poisson,root")]
    pub methods: Vec<MethodArg>,
    /// Compute the exact column in rational arithmetic.
    #[arg(long)]
    pub rational: bool,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Which plot: 1 (three values of n) or 2 (three values of p).
    #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
    pub fig: u8,
    /// Also write an SVG rendering here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    #[value(name = "R")]
    R,
    #[value(name = "G")]
    G,
    #[value(name = "G_ell")]
    GEll,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value = "1/2")]
    pub p: String,
    #[arg(long, value_enum, default_value_t = Target::R)]
    pub target: Target,
    /// Run length for `G_ell`.
    #[arg(long)]
    pub ell: Option<u32>,
    /// Rational arithmetic; weights printed as `a/b`.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// E C(G_ℓ(n), r), runs of length at least ℓ.
    G,
    /// E Π C(R_ℓj(n), r_j), runs of length exactly ℓ_j.
    R,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value = "1/2")]
    pub p: String,
    #[arg(long, value_enum, default_value_t = Kind::G)]
    pub kind: Kind,
    /// Run lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ell: Vec<u32>,
    /// Orders, one per run length.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub r: Vec<u64>,
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct StoppedArgs {
    #[arg(long, default_value = "1/2")]
    pub p: String,
    /// Geometric weight `w` in (0,1).
    #[arg(long, default_value = "1/2")]
    pub w: String,
    /// One or more queries, e.g. `L*<3`, `E[R*_2]`, `G*_1=0`.
    #[arg(long, required = true)]
    pub query: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value = "1/2")]
    pub p: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// A registered functional: `longest<ℓ`, `total_runs`, `head_count`, `R_ℓ`, `G_ℓ`.
    #[arg(long)]
    pub functional: String,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long)]
    pub ell: u32,
    #[arg(long, default_value = "1/2")]
    pub p: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = OutputSpec {
        format: cli.format,
        precision: cli.precision as usize,
        destination: cli.out.clone(),
    };
    let result = match &cli.command {
        Command::Longest(a) => commands::longest(a, &output),
        Command::Figure(a) => commands::figure(a, &output),
        Command::Dist(a) => commands::dist(a, &output),
        Command::Moments(a) => commands::moments(a, &output),
        Command::Stopped(a) => commands::stopped(a, &output),
        Command::Simulate(a) => commands::simulate(a, cli.seed, &output),
        Command::Roots(a) => commands::roots(a, &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
