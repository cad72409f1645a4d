//! Benchmark CLI: instance generation, single solves, parameter sweeps and
//! verification suites for the mirror-descent OT solver.
//!
//! Exit codes are a stable contract: 0 success, 2 generation failure,
//! 3 numerical instability, 4 non-convergence. All randomness flows from
//! explicit `--seed` flags. `MDOT_THREADS` caps worker parallelism.

mod gen;
mod mnist;
mod report;
mod solve;
mod sweep;
mod verify;

use clap::{Parser, Subcommand};

pub const EXIT_GENERATION: i32 = 2;
pub const EXIT_INSTABILITY: i32 = 3;
pub const EXIT_NON_CONVERGENCE: i32 = 4;

/// A failure with the exit code it maps to.
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn io(err: std::io::Error) -> Self {
        Self::new(1, format!("i/o error: {err}"))
    }

    pub fn from_solve(err: mdot::SolveError) -> Self {
        let code = match &err {
            mdot::SolveError::Instability { .. } => EXIT_INSTABILITY,
            mdot::SolveError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
            // a failed line-search bracket is a numerical breakdown too
            mdot::SolveError::LineSearch { .. } => EXIT_INSTABILITY,
            _ => 1,
        };
        Self::new(code, err.to_string())
    }

    pub fn from_datagen(err: mdot::datagen::DatagenError) -> Self {
        Self::new(EXIT_GENERATION, err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "mdot",
    about = "Discrete optimal transport via mirror descent with warm-started Bregman projections",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance file (costs from unit-sphere points,
    /// entropy-targeted Dirichlet marginals)
    Gen(gen::GenArgs),
    /// Solve one instance file and emit a JSON report / CSV trace
    Solve(solve::SolveArgs),
    /// Run a parameter grid over generated instances, one CSV row per cell
    Sweep(sweep::SweepArgs),
    /// Pairwise OT distances between MNIST images (IDX file)
    Mnist(mnist::MnistArgs),
    /// Run the desk-scale verification suites and print per-check slack
    Verify(verify::VerifyArgs),
}

fn main() {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen::run(args),
        Command::Solve(args) => solve::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::Mnist(args) => mnist::run(args),
        Command::Verify(args) => verify::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {}", err.message);
        std::process::exit(err.code);
    }
}

/// Honor `MDOT_THREADS` before any parallel work starts.
fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Ok(value) = std::env::var("MDOT_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

pub fn parse_projector(s: &str) -> Result<mdot::ProjectorKind, String> {
    s.parse()
}
