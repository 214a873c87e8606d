//! `kgraph` command-line harness.

mod bench;
mod gen;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgraph::Error;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "kgraph", version, about = "Kernel graph matvec, sparsification and Laplacian solving")]
struct Cli {
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate a synthetic point cloud.
    Gen(GenArgs),
    /// Multiply the kernel adjacency or Laplacian matrix by a vector.
    Matvec(MatvecArgs),
    /// Spectrally sparsify a kernel or inner-product graph.
    Sparsify(SparsifyArgs),
    /// Solve a kernel Laplacian system.
    Solve(SolveArgs),
    /// Check a result against the dense oracles.
    Verify(VerifyArgs),
    /// Time a task over a sweep of sizes and fit a log-log slope.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    shape: gen::Shape,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    seed: u64,
    /// Box side, or the scale of the mixture centres.
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    /// Standard deviation of each mixture component.
    #[arg(long, default_value_t = 0.1)]
    spread: f64,
    /// Output point file; `.gkpt` selects the binary format.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Dense,
    Lowrank,
    Taylor,
    Fgt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Op {
    #[default]
    Adjacency,
    Laplacian,
}

#[derive(Debug, Args)]
struct MatvecArgs {
    #[arg(long, value_enum)]
    engine: Engine,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    kernel: String,
    /// `ones`, `random` (needs --seed) or a vector file.
    #[arg(long, default_value = "ones")]
    y: String,
    #[arg(long, value_enum, default_value_t = Op::Adjacency)]
    op: Op,
    /// Additive accuracy for the approximate engines, relative to `||y||_inf`.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Highdim,
    Lowdim,
    Innerprod,
}

#[derive(Debug, Args)]
struct SparsifyArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long = "in")]
    input: PathBuf,
    /// Required except for `innerprod`.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    /// Multiplicative Lipschitz order; estimated from the instance when omitted.
    #[arg(long)]
    l: Option<f64>,
    /// Projection dimension for `highdim`.
    #[arg(long)]
    proj_dim: Option<usize>,
    /// Run the dense spectral check and record the eigenvalue range.
    #[arg(long)]
    check: bool,
    /// Output graph as `u\tv\tw` lines.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    kernel: String,
    /// Right-hand side vector file.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    /// `practical` or `paper`.
    #[arg(long, default_value = "practical")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
    /// Solver report with the per-iteration history.
    #[arg(long)]
    solve_report: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyTask {
    Spectral,
    Matvec,
    Solve,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    task: VerifyTask,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<String>,
    /// Reference graph: `dense` (kernel graph of --in), `innerprod`, or a graph file.
    #[arg(long)]
    g: Option<String>,
    /// Candidate graph, same forms as --g.
    #[arg(long)]
    h: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Input vector of the product being checked.
    #[arg(long, default_value = "ones")]
    y: String,
    #[arg(long, value_enum, default_value_t = Op::Adjacency)]
    op: Op,
    /// Vector to check: a product for `matvec`, a solution for `solve`.
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    /// Relative Laplacian-norm tolerance for `solve`.
    #[arg(long)]
    delta: Option<f64>,
    /// Additive tolerance for `matvec`.
    #[arg(long)]
    tol: Option<f64>,
    /// Report whose claimed bound is re-validated.
    #[arg(long)]
    claimed: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchTask {
    SparsifyHighdim,
    SparsifyLowdim,
    SparsifyInnerprod,
    Fgt,
    MatvecTaylor,
    MatvecDense,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    task: BenchTask,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// Repetitions per size; the fastest is kept.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Sweep JSON with per-size runtimes and the fitted slope.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Verification ran and the check failed.
const EXIT_FAIL: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", json!({ "schema": 1, "error": { "kind": "usage", "message": msg.trim() } }));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("{}", json!({ "schema": 1, "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> kgraph::Result<bool> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    match cli.cmd {
        Cmd::Gen(a) => run::gen(a).map(|_| true),
        Cmd::Matvec(a) => run::matvec(a).map(|_| true),
        Cmd::Sparsify(a) => run::sparsify(a).map(|_| true),
        Cmd::Solve(a) => run::solve(a).map(|_| true),
        Cmd::Verify(a) => run::verify(a),
        Cmd::Bench(a) => bench::bench(a).map(|_| true),
    }
}
