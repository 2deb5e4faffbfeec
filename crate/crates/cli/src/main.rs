//! `hyperorbit`: runs the library's verifications and constructions and
//! writes a JSON `RunReport`.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on input errors.

mod cmd;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use input::{write_json, InputError};

#[derive(Parser)]
#[command(name = "hyperorbit", version, about = "Verification harness for m-linear hypercyclic operators")]
struct Cli {
    /// Report path; the report goes to stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for sampled vectors
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BuildTarget {
    Companion,
    #[value(name = "universal_l1", alias = "universal-l1")]
    UniversalL1,
    #[value(name = "delta_d", alias = "delta-d")]
    DeltaD,
    #[value(name = "q_blocks", alias = "q-blocks")]
    QBlocks,
    #[value(name = "symmetric_preimage", alias = "symmetric-preimage")]
    SymmetricPreimage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    Identity,
    Diagonal,
    Banded,
}

#[derive(Subcommand)]
enum Command {
    /// Fibonacci identities and the exponent sequence a_n
    Identities {
        #[arg(long, default_value_t = 200)]
        max_n: usize,
        /// Corrupt F_k in the cache before checking (negative control)
        #[arg(long, hide = true)]
        corrupt_fib: Option<usize>,
    },
    /// Iterate a BC orbit and cross-check it against the closed form
    Orbit {
        #[arg(long)]
        operator: String,
        /// JSON file with the initial tuple
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// inverse_square, unit, linear or constant:<c>
        #[arg(long, default_value = "inverse_square")]
        weights: String,
        /// Relative tolerance of the closed-form cross-check
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Exact rational iteration (mc_CN only)
        #[arg(long)]
        rational: bool,
        /// JSON-lines trace path
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build one of the explicit constructions and certify it
    Build {
        #[arg(value_enum)]
        target: BuildTarget,
        /// Number of blocks (universal_l1, q_blocks)
        #[arg(long, default_value_t = 3)]
        blocks: usize,
        /// Input vector: y (companion), g (delta_d) or x_0 (symmetric_preimage)
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "inverse_square")]
        weights: String,
        /// λ as "re,im" (symmetric_preimage)
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        lambda: String,
        /// Length of the sampled g (delta_d without --init)
        #[arg(long, default_value_t = 30)]
        len: usize,
        /// Where to write the built vectors, as an array usable with `orbit --init`
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Commutation and push-forward checks for the quasiconjugation
    Conjugate {
        #[arg(long, value_enum)]
        basis: Basis,
        #[arg(long = "n", default_value_t = 200)]
        n: usize,
        /// Basis pairs e_k, e_j with k, j ≤ samples
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        random_pairs: usize,
        /// Diagonal scale s (x_n = s e_n) or band parameter u
        #[arg(long, allow_hyphen_values = true)]
        scale: Option<f64>,
        /// Push-forward steps
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Bisect for the Julia boundary along a ray
    Julia {
        /// Direction vector file; the factorial tail 1/(i-1)!² when absent
        #[arg(long)]
        direction: Option<PathBuf>,
        #[arg(long, default_value = "1,20")]
        bracket: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value = "inverse_square")]
        weights: String,
    },
}

fn run(cli: Cli) -> Result<report::RunReport, InputError> {
    match cli.command {
        Command::Identities { max_n, corrupt_fib } => cmd::identities(max_n, corrupt_fib),
        Command::Orbit { operator, init, steps, weights, tol, rational, trace } => {
            cmd::orbit(&cmd::OrbitArgs { operator, init, steps, weights, tol, rational, trace })
        }
        Command::Build { target, blocks, init, tol, weights, lambda, len, vectors } => {
            cmd::build(&cmd::BuildArgs { target, blocks, init, tol, weights, lambda, len, vectors, seed: cli.seed })
        }
        Command::Conjugate { basis, n, samples, random_pairs, scale, steps, tol } => {
            cmd::conjugate(&cmd::ConjugateArgs { basis, n, samples, random_pairs, scale, steps, tol, seed: cli.seed })
        }
        Command::Julia { direction, bracket, tol, weights } => cmd::julia(direction, &bracket, tol, &weights),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let report = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let value = serde_json::to_value(&report).expect("reports serialize");
    match out {
        Some(path) => {
            if let Err(e) = write_json(&path, &value) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let failed = report.checks.iter().filter(|c| c.status == report::Status::Fail).count();
            eprintln!("{}: {} checks, {failed} failed", report.command, report.checks.len());
        }
        None => {
            // a closed pipe is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&value).expect("reports serialize"));
        }
    }
    ExitCode::from(report.exit_code())
}
