//! Experiment harness: consistent right-hand sides, repeated solver runs over
//! matrix grids, and machine-readable result emission.

pub mod fetch;

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::solvers::{
    arbk_solve_random_partition, grbk_solve, grebkk_solve, pobk_solve, rbkk_solve, rk_solve,
    SolveReport, SolverConfig,
};
use crate::sparse::matrix_market::load_matrix_market;
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// How the reference solution behind a benchmark system is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    Ones,
    SeededRandom,
}

/// Builds a consistent system: picks `x*` per `mode` and returns
/// `(f = A x*, x*)` so the relative solution error stays computable.
pub fn generate_rhs(a: &SparseMatrix, mode: RhsMode, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    let x_star = match mode {
        RhsMode::Ones => vec![1.0; a.ncols()],
        RhsMode::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..a.ncols()).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    };
    let f = a.spmv(&x_star)?;
    Ok((f, x_star))
}

/// The solvers the harness can dispatch to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Rk,
    Grbk,
    Rbkk,
    Grebkk,
    Arbk,
    Pobk,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Rk,
        SolverKind::Grbk,
        SolverKind::Rbkk,
        SolverKind::Grebkk,
        SolverKind::Arbk,
        SolverKind::Pobk,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Rk => "rk",
            SolverKind::Grbk => "grbk",
            SolverKind::Rbkk => "rbkk",
            SolverKind::Grebkk => "grebkk",
            SolverKind::Arbk => "arbk",
            SolverKind::Pobk => "pobk",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn run(
        &self,
        a: &SparseMatrix,
        f: &[f64],
        x_star: &[f64],
        cfg: &SolverConfig,
    ) -> Result<SolveReport> {
        match self {
            SolverKind::Rk => rk_solve(a, f, x_star, cfg),
            SolverKind::Grbk => grbk_solve(a, f, x_star, cfg),
            SolverKind::Rbkk => rbkk_solve(a, f, x_star, cfg),
            SolverKind::Grebkk => grebkk_solve(a, f, x_star, cfg),
            SolverKind::Arbk => arbk_solve_random_partition(a, f, x_star, cfg),
            SolverKind::Pobk => pobk_solve(a, f, x_star, cfg),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One matrix in an experiment grid.
#[derive(Debug, Clone)]
pub struct MatrixSource {
    pub label: String,
    pub path: PathBuf,
}

/// One solver column in an experiment grid.
#[derive(Debug, Clone)]
pub struct SolverSetup {
    pub kind: SolverKind,
    pub cfg: SolverConfig,
}

/// A full benchmark: every matrix crossed with every solver, repeated runs,
/// averaged like the reference protocol.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub matrices: Vec<MatrixSource>,
    pub solvers: Vec<SolverSetup>,
    pub repetitions: usize,
    pub rhs: RhsMode,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.matrices.is_empty() || self.solvers.is_empty() {
            return Err(Error::InvalidConfig(
                "experiment needs at least one matrix and one solver".to_string(),
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig(
                "repetitions must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

mod metric_serde {
    //! Serializes metric floats as numbers, with non-finite values spelled as
    //! the literal strings `"Inf"` / `"NAN"`.
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            "NAN".serialize(s)
        } else if v.is_infinite() {
            "Inf".serialize(s)
        } else {
            v.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "Inf" => Ok(f64::INFINITY),
                "NAN" => Ok(f64::NAN),
                other => other.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}

/// One cell of the result grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub matrix: String,
    pub m: usize,
    pub nnz: usize,
    /// Percentage of stored entries, `100 * nnz / m^2`.
    pub density: f64,
    pub solver: String,
    pub k: usize,
    pub thr: f64,
    pub theta: f64,
    /// Mean outer iterations; `Inf` once any repetition fails to converge.
    #[serde(with = "metric_serde")]
    pub mean_it: f64,
    /// Mean solve seconds; `NAN` once any repetition fails to converge.
    #[serde(with = "metric_serde")]
    pub mean_cpu_s: f64,
    /// Repetitions that converged.
    pub converged: usize,
    pub reps: usize,
    pub final_rse: f64,
}

/// Runs the full grid. Failures of single cells (unloadable matrix, solver
/// error, non-convergence) are recorded in their rows; the grid never aborts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.matrices.len() * spec.solvers.len());
    for source in &spec.matrices {
        let loaded = load_matrix_market(&source.path);
        for setup in &spec.solvers {
            let row = match &loaded {
                Ok(a) => run_cell(source, a, setup, spec),
                Err(_) => failed_row(source, setup, spec.repetitions),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn failed_row(source: &MatrixSource, setup: &SolverSetup, reps: usize) -> ResultRow {
    ResultRow {
        matrix: source.label.clone(),
        m: 0,
        nnz: 0,
        density: f64::NAN,
        solver: setup.kind.name().to_string(),
        k: setup.cfg.k,
        thr: setup.cfg.thr,
        theta: setup.cfg.theta,
        mean_it: f64::INFINITY,
        mean_cpu_s: f64::NAN,
        converged: 0,
        reps,
        final_rse: f64::NAN,
    }
}

fn run_cell(
    source: &MatrixSource,
    a: &SparseMatrix,
    setup: &SolverSetup,
    spec: &ExperimentSpec,
) -> ResultRow {
    let m = a.nrows();
    let density = 100.0 * a.nnz() as f64 / (m as f64 * m as f64);
    let mut it_sum = 0.0;
    let mut cpu_sum = 0.0;
    let mut rse_sum = 0.0;
    let mut converged = 0usize;
    for rep in 0..spec.repetitions {
        let cfg = SolverConfig {
            seed: spec.seed + rep as u64,
            ..setup.cfg.clone()
        };
        let outcome = generate_rhs(a, spec.rhs, spec.seed)
            .and_then(|(f, x_star)| setup.kind.run(a, &f, &x_star, &cfg));
        match outcome {
            Ok(report) if report.converged() => {
                converged += 1;
                it_sum += report.iterations as f64;
                cpu_sum += report.wall_time;
                rse_sum += report.final_rse();
            }
            Ok(report) => {
                it_sum += f64::INFINITY;
                cpu_sum += f64::NAN;
                rse_sum += report.final_rse();
            }
            Err(_) => {
                it_sum += f64::INFINITY;
                cpu_sum += f64::NAN;
                rse_sum += f64::NAN;
            }
        }
    }
    let reps = spec.repetitions as f64;
    ResultRow {
        matrix: source.label.clone(),
        m,
        nnz: a.nnz(),
        density,
        solver: setup.kind.name().to_string(),
        k: setup.cfg.k,
        thr: setup.cfg.thr,
        theta: setup.cfg.theta,
        mean_it: it_sum / reps,
        mean_cpu_s: cpu_sum / reps,
        converged,
        reps: spec.repetitions,
        final_rse: rse_sum / reps,
    }
}

fn fmt_metric(v: f64) -> String {
    if v.is_nan() {
        "NAN".to_string()
    } else if v.is_infinite() {
        "Inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Fixed-header CSV, one line per grid cell.
pub fn emit_results_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "matrix,m,nnz,density,solver,k,thr,theta,mean_it,mean_cpu_s,converged,reps,final_rse"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.matrix,
            r.m,
            r.nnz,
            fmt_metric(r.density),
            r.solver,
            r.k,
            r.thr,
            r.theta,
            fmt_metric(r.mean_it),
            fmt_metric(r.mean_cpu_s),
            r.converged,
            r.reps,
            fmt_metric(r.final_rse),
        )?;
    }
    Ok(())
}

/// JSON array of row objects with the same keys as the CSV columns.
pub fn emit_results_json<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Parses rows back from the JSON emitted by [`emit_results_json`].
pub fn parse_results_json(data: &[u8]) -> Result<Vec<ResultRow>> {
    serde_json::from_slice(data).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Per-outer-iteration trace as `outer_iter,rse` CSV, for external plotting.
pub fn emit_trace<W: Write>(report: &SolveReport, mut out: W) -> Result<()> {
    writeln!(out, "outer_iter,rse")?;
    for (i, rse) in report.rse_trace.iter().enumerate() {
        writeln!(out, "{i},{rse}")?;
    }
    Ok(())
}
