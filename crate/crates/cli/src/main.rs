//! Command-line harness around the solver library: single solves with trace
//! output, benchmark grids from a TOML spec, reordering reports, and matrix
//! downloads from the SuiteSparse collection.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use kaczmarz::bench::{
    emit_results_csv, emit_results_json, emit_trace, fetch, generate_rhs, run_experiment,
    ExperimentSpec, MatrixSource, ResultRow, RhsMode, SolverKind, SolverSetup,
};
use kaczmarz::reorder::{bandwidth, rcm_order};
use kaczmarz::solvers::SolverConfig;
use kaczmarz::sparse::matrix_market::load_matrix_market;
use kaczmarz::sparse::{PermuteSide, SparseMatrix};

#[derive(Parser)]
#[command(name = "kaczmarz", version, about = "Sparse block Kaczmarz solver benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one system and report the convergence trace.
    Solve(SolveArgs),
    /// Run a solver-by-matrix grid described by a TOML spec file.
    Bench(BenchArgs),
    /// Print bandwidth before and after reverse Cuthill-McKee reordering.
    Reorder(ReorderArgs),
    /// Download a collection matrix into the local cache.
    Fetch(FetchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Rk,
    Grbk,
    Rbkk,
    Grebkk,
    Arbk,
    Pobk,
}

impl From<SolverArg> for SolverKind {
    fn from(v: SolverArg) -> Self {
        match v {
            SolverArg::Rk => SolverKind::Rk,
            SolverArg::Grbk => SolverKind::Grbk,
            SolverArg::Rbkk => SolverKind::Rbkk,
            SolverArg::Grebkk => SolverKind::Grebkk,
            SolverArg::Arbk => SolverKind::Arbk,
            SolverArg::Pobk => SolverKind::Pobk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RhsArg {
    Ones,
    Random,
}

impl From<RhsArg> for RhsMode {
    fn from(v: RhsArg) -> Self {
        match v {
            RhsArg::Ones => RhsMode::Ones,
            RhsArg::Random => RhsMode::SeededRandom,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Path to a .mtx file or a collection matrix name.
    #[arg(long)]
    matrix: String,
    #[arg(long, value_enum)]
    solver: SolverArg,
    /// Number of row blocks.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Centroid-cosine orthogonality threshold.
    #[arg(long, default_value_t = 0.05)]
    thr: f64,
    /// Greedy relaxation parameter.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Averaged-solver step size.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Rows sampled per group per iteration (averaged solver).
    #[arg(long)]
    sample_size: Option<usize>,
    /// Reference-solution mode behind the generated right-hand side.
    #[arg(long, value_enum, default_value_t = RhsArg::Ones)]
    rhs: RhsArg,
    /// Write a JSON solve report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the outer_iter,rse trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct CacheArgs {
    /// Cache directory for downloaded matrices.
    #[arg(long, default_value = "data/suitesparse")]
    cache_dir: PathBuf,
    /// Never touch the network; only local paths and cached files.
    #[arg(long)]
    offline: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML experiment spec (see README for the format).
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON copy of the results.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ReorderArgs {
    #[arg(long)]
    matrix: String,
    /// Print the bandwidth/timing report (default behavior).
    #[arg(long, default_value_t = true)]
    report: bool,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(long)]
    matrix: String,
    #[command(flatten)]
    cache: CacheArgs,
}

fn resolve_matrix(spec: &str, cache: &CacheArgs) -> Result<(String, PathBuf)> {
    let as_path = Path::new(spec);
    if as_path.is_file() {
        let label = as_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        return Ok((label, as_path.to_path_buf()));
    }
    if cache.offline {
        if let Some(cached) = fetch::cached_path(spec, &cache.cache_dir) {
            if cached.is_file() {
                return Ok((spec.to_string(), cached));
            }
        }
        bail!("matrix {spec} is not a local file and --offline is set");
    }
    let path = fetch::fetch_matrix(spec, &cache.cache_dir)
        .with_context(|| format!("fetching {spec}"))?;
    Ok((spec.to_string(), path))
}

fn load(spec: &str, cache: &CacheArgs) -> Result<(String, SparseMatrix)> {
    let (label, path) = resolve_matrix(spec, cache)?;
    let matrix =
        load_matrix_market(&path).with_context(|| format!("loading {}", path.display()))?;
    Ok((label, matrix))
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let (label, a) = load(&args.matrix, &args.cache)?;
    let (f, x_star) = generate_rhs(&a, args.rhs.into(), args.seed)?;
    let cfg = SolverConfig {
        tol: args.tol,
        max_iters: args.max_iters,
        theta: args.theta,
        k: args.k,
        thr: args.thr,
        alpha: args.alpha,
        sample_size: args.sample_size,
        seed: args.seed,
        ..Default::default()
    };
    let kind: SolverKind = args.solver.into();
    let report = kind.run(&a, &f, &x_star, &cfg)?;

    println!("matrix      {label} ({} x {}, nnz {})", a.nrows(), a.ncols(), a.nnz());
    println!("solver      {kind} (k={}, thr={}, theta={})", args.k, args.thr, args.theta);
    println!("termination {}", report.termination);
    println!("iterations  {}", report.iterations);
    println!("projections {}", report.projections);
    println!("final rse   {:.3e}", report.final_rse());
    println!("wall time   {:.6}s", report.wall_time);

    if let Some(path) = &args.trace {
        let file = std::fs::File::create(path)?;
        emit_trace(&report, file)?;
        println!("trace       {}", path.display());
    }
    if let Some(path) = &args.out {
        let payload = serde_json::json!({
            "matrix": label,
            "m": a.nrows(),
            "nnz": a.nnz(),
            "solver": kind.name(),
            "k": args.k,
            "thr": args.thr,
            "theta": args.theta,
            "tol": args.tol,
            "seed": args.seed,
            "iterations": report.iterations,
            "projections": report.projections,
            "wall_time_s": report.wall_time,
            "termination": report.termination.to_string(),
            "final_rse": report.final_rse(),
            "solution": report.solution,
        });
        std::fs::write(path, serde_json::to_string_pretty(&payload)?)?;
        println!("report      {}", path.display());
    }
    Ok(())
}

/// On-disk benchmark spec: flat keys plus one `[[solvers]]` section per
/// solver column.
#[derive(Deserialize)]
struct BenchFile {
    matrices: Vec<String>,
    #[serde(default = "default_repetitions")]
    repetitions: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_rhs")]
    rhs: RhsMode,
    #[serde(default)]
    cache_dir: Option<PathBuf>,
    #[serde(default)]
    offline: bool,
    solvers: Vec<SolverSection>,
}

fn default_repetitions() -> usize {
    10
}

fn default_rhs() -> RhsMode {
    RhsMode::Ones
}

#[derive(Deserialize)]
struct SolverSection {
    kind: String,
    tol: Option<f64>,
    max_iters: Option<usize>,
    theta: Option<f64>,
    k: Option<usize>,
    thr: Option<f64>,
    alpha: Option<f64>,
    weights: Option<Vec<f64>>,
    sample_size: Option<usize>,
}

impl SolverSection {
    fn build(&self) -> Result<SolverSetup> {
        let kind = SolverKind::from_name(&self.kind)
            .with_context(|| format!("unknown solver kind {:?}", self.kind))?;
        let defaults = SolverConfig::default();
        let cfg = SolverConfig {
            tol: self.tol.unwrap_or(defaults.tol),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            theta: self.theta.unwrap_or(defaults.theta),
            k: self.k.unwrap_or(defaults.k),
            thr: self.thr.unwrap_or(defaults.thr),
            alpha: self.alpha.unwrap_or(defaults.alpha),
            weights: self.weights.clone(),
            sample_size: self.sample_size,
            seed: defaults.seed,
        };
        cfg.validate()?;
        Ok(SolverSetup { kind, cfg })
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let file: BenchFile = toml::from_str(&text).context("parsing bench spec")?;
    let cache = CacheArgs {
        cache_dir: file
            .cache_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("data/suitesparse")),
        offline: file.offline,
    };

    let mut matrices = Vec::new();
    for name in &file.matrices {
        let (label, path) = resolve_matrix(name, &cache)?;
        matrices.push(MatrixSource { label, path });
    }
    let solvers = file
        .solvers
        .iter()
        .map(SolverSection::build)
        .collect::<Result<Vec<_>>>()?;
    let spec = ExperimentSpec {
        matrices,
        solvers,
        repetitions: file.repetitions,
        rhs: file.rhs,
        seed: file.seed,
    };

    let rows: Vec<ResultRow> = run_experiment(&spec)?;
    let out = std::fs::File::create(&args.out)?;
    emit_results_csv(&rows, out)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    if let Some(json) = &args.json {
        let file = std::fs::File::create(json)?;
        emit_results_json(&rows, file)?;
        println!("wrote JSON copy to {}", json.display());
    }
    Ok(())
}

fn cmd_reorder(args: &ReorderArgs) -> Result<()> {
    let (label, a) = load(&args.matrix, &args.cache)?;
    let before = bandwidth(&a)?;
    let started = Instant::now();
    let p = rcm_order(&a)?;
    let rcm_time = started.elapsed().as_secs_f64();
    let after = bandwidth(&a.apply_permutation(&p, PermuteSide::Both)?)?;
    if args.report {
        println!("matrix           {label} ({} x {}, nnz {})", a.nrows(), a.ncols(), a.nnz());
        println!("bandwidth before {before}");
        println!("bandwidth after  {after}");
        println!("rcm time         {rcm_time:.6}s");
    }
    Ok(())
}

fn cmd_fetch(args: &FetchArgs) -> Result<()> {
    let path = fetch::fetch_matrix(&args.matrix, &args.cache.cache_dir)?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Reorder(args) => cmd_reorder(args),
        Command::Fetch(args) => cmd_fetch(args),
    }
}
