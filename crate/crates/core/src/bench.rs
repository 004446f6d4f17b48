//! Benchmark pipeline: load or generate a matrix, optionally scale it, build
//! a preconditioner, run (P)CG and report.
//!
//! The right-hand side is `b = A x*` with `x*` uniform in `(0, 1)`, drawn
//! from ChaCha8 seeded by `seed`. When scaling is on, `x*` and `b` belong to
//! the scaled system (the one being timed); the computed solution is mapped
//! back to the original unknowns for error reporting.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aib;
use crate::error::{Error, Result};
use crate::krylov::{self, CgOptions, IdentityPreconditioner, Preconditioner, SolveOutcome};
use crate::mm;
use crate::sparse::SymSparseMatrix;
use crate::sparse_solve::SparseSolveParams;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    File(PathBuf),
    Laplacian { nx: usize, ny: usize },
}

impl MatrixSource {
    pub fn name(&self) -> String {
        match self {
            MatrixSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            MatrixSource::Laplacian { nx, ny } => format!("laplacian-{nx}x{ny}"),
        }
    }

    pub fn load(&self) -> Result<SymSparseMatrix> {
        match self {
            MatrixSource::File(p) => mm::read_matrix_market(p),
            MatrixSource::Laplacian { nx, ny } => laplacian_2d(*nx, *ny),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    None,
    Jacobi,
    Aib,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub source: MatrixSource,
    pub scale: bool,
    pub precond: PrecondKind,
    pub params: SparseSolveParams,
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    /// Workers for the preconditioner build; 0 uses the rayon default.
    pub threads: usize,
    pub history_stride: usize,
    pub history_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(source: MatrixSource, precond: PrecondKind) -> Self {
        BenchConfig {
            source,
            scale: false,
            precond,
            params: SparseSolveParams::default(),
            tol: 1e-8,
            maxit: 10_000,
            seed: 0,
            threads: 0,
            history_stride: 1,
            history_path: None,
            report_path: None,
            plot_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidParameter("maxit must be >= 1".into()));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    NotConverged,
    InputError,
    Breakdown,
}

/// One benchmark run. Times are wall-clock seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub matrix: String,
    pub n: usize,
    pub nnz_lower: usize,
    pub precond: PrecondKind,
    pub scaled: bool,
    pub m: usize,
    pub eps: f64,
    pub lfil: usize,
    /// Fill ratio, only for `aib`.
    pub rho: Option<f64>,
    /// Iterations to convergence (P-Its).
    pub iterations: usize,
    pub p_time: f64,
    pub it_time: f64,
    pub t_time: f64,
    pub converged: bool,
    pub status: RunStatus,
    pub error: Option<String>,
    pub final_relres: Option<f64>,
    /// `||x - x*|| / ||x*||` in the original unknowns.
    pub solution_error: Option<f64>,
    /// Which system the stopping test measured.
    pub residual_basis: &'static str,
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub threads: usize,
}

impl BenchReport {
    fn empty(cfg: &BenchConfig) -> Self {
        BenchReport {
            matrix: cfg.source.name(),
            n: 0,
            nnz_lower: 0,
            precond: cfg.precond,
            scaled: cfg.scale,
            m: cfg.params.m,
            eps: cfg.params.eps,
            lfil: cfg.params.lfil,
            rho: None,
            iterations: 0,
            p_time: 0.0,
            it_time: 0.0,
            t_time: 0.0,
            converged: false,
            status: RunStatus::InputError,
            error: None,
            final_relres: None,
            solution_error: None,
            residual_basis: if cfg.scale { "scaled" } else { "original" },
            tol: cfg.tol,
            maxit: cfg.maxit,
            seed: cfg.seed,
            threads: cfg.threads,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Human-readable table.
    pub fn render_table(&self) -> String {
        let rho = self.rho.map_or("-".to_string(), |r| format!("{r:.2}"));
        let its = if self.converged {
            self.iterations.to_string()
        } else {
            format!("{}†", self.iterations)
        };
        let mut s = String::new();
        s.push_str(&format!(
            "{:<20} {:>8} {:>9} {:>7} {:>6} {:>8} {:>9} {:>9} {:>9}\n",
            "matrix", "n", "nnz", "precond", "rho", "P-Its", "P-time", "It-time", "T-time"
        ));
        s.push_str(&format!(
            "{:<20} {:>8} {:>9} {:>7} {:>6} {:>8} {:>9.3} {:>9.3} {:>9.3}\n",
            self.matrix,
            self.n,
            self.nnz_lower,
            format!("{:?}", self.precond).to_lowercase(),
            rho,
            its,
            self.p_time,
            self.it_time,
            self.t_time
        ));
        if let Some(e) = &self.error {
            s.push_str(&format!("error: {e}\n"));
        }
        s
    }
}

/// Result of [`run_benchmark`]: the report plus the convergence history.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BenchReport,
    pub history: Vec<(usize, f64)>,
}

/// `b = A x*` with `x*_i` uniform in the open interval `(0, 1)`.
pub fn generate_rhs(a: &SymSparseMatrix, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..a.dim()).map(|_| rng.sample(Open01)).collect();
    let b = a.matvec(&x).expect("length matches");
    (b, x)
}

/// Five-point negative Laplacian on an `nx x ny` grid with Dirichlet
/// boundary: 4 on the diagonal, -1 to each grid neighbour. Unknown
/// `(i, j)` has index `i + nx * j`.
pub fn laplacian_2d(nx: usize, ny: usize) -> Result<SymSparseMatrix> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter(format!(
            "laplacian grid must be at least 2x2, got {nx}x{ny}"
        )));
    }
    let idx = |i: usize, j: usize| i + nx * j;
    let mut t = Vec::with_capacity(3 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            t.push((idx(i, j), idx(i, j), 4.0));
            if i > 0 {
                t.push((idx(i, j), idx(i - 1, j), -1.0));
            }
            if j > 0 {
                t.push((idx(i, j), idx(i, j - 1), -1.0));
            }
        }
    }
    SymSparseMatrix::from_triplets(nx * ny, t)
}

enum Failure {
    Input(Error),
    Breakdown(Error),
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Breakdown { .. } | Error::NotSpd(_) | Error::PreconditionerNotSpd { .. } => Failure::Breakdown(e),
        other => Failure::Input(other),
    }
}

fn solve_with(
    a: &SymSparseMatrix,
    b: &[f64],
    m: &dyn Preconditioner,
    opts: &CgOptions,
) -> std::result::Result<SolveOutcome, Failure> {
    krylov::pcg(a, b, m, None, opts).map_err(classify)
}

/// Runs one benchmark and writes whichever outputs `cfg` names. Failures
/// are recorded in the report, never dropped.
pub fn run_benchmark(cfg: &BenchConfig) -> BenchRun {
    let mut report = BenchReport::empty(cfg);
    let mut history = Vec::new();
    match execute(cfg, &mut report, &mut history) {
        Ok(()) => {}
        Err(Failure::Input(e)) => {
            report.status = RunStatus::InputError;
            report.error = Some(e.to_string());
        }
        Err(Failure::Breakdown(e)) => {
            report.status = RunStatus::Breakdown;
            report.error = Some(e.to_string());
        }
    }
    report.t_time = report.p_time + report.it_time;
    if let Err(e) = write_outputs(cfg, &report, &history) {
        report.status = RunStatus::InputError;
        report.error = Some(format!("writing outputs: {e}"));
    }
    BenchRun { report, history }
}

fn execute(
    cfg: &BenchConfig,
    report: &mut BenchReport,
    history: &mut Vec<(usize, f64)>,
) -> std::result::Result<(), Failure> {
    cfg.validate().map_err(Failure::Input)?;
    let original = cfg.source.load().map_err(Failure::Input)?;
    report.n = original.dim();
    report.nnz_lower = original.nnz_lower();

    let (a, scale) = if cfg.scale {
        let (s, d) = original.jacobi_scale().map_err(Failure::Input)?;
        (s, Some(d))
    } else {
        (original, None)
    };
    let (b, x_exact) = generate_rhs(&a, cfg.seed);
    let opts = CgOptions {
        history_stride: cfg.history_stride,
        ..CgOptions::new(cfg.tol, cfg.maxit)
    };

    let outcome = match cfg.precond {
        PrecondKind::None => solve_with(&a, &b, &IdentityPreconditioner, &opts)?,
        PrecondKind::Jacobi => {
            let t = Instant::now();
            let m = krylov::jacobi_preconditioner(&a).map_err(Failure::Input)?;
            report.p_time = t.elapsed().as_secs_f64();
            solve_with(&a, &b, &m, &opts)?
        }
        PrecondKind::Aib => {
            let t = Instant::now();
            let f = aib::build_with_threads(&a, &cfg.params, cfg.threads).map_err(classify)?;
            report.p_time = t.elapsed().as_secs_f64();
            report.rho = Some(f.rho());
            solve_with(&a, &b, &f, &opts)?
        }
    };

    report.it_time = outcome.total_time.as_secs_f64();
    report.iterations = outcome.iterations;
    report.converged = outcome.converged;
    report.final_relres = Some(outcome.final_relres());
    report.status = if outcome.converged {
        RunStatus::Converged
    } else {
        RunStatus::NotConverged
    };

    let (x, x_exact) = match &scale {
        Some(d) => (
            outcome.x.iter().zip(d).map(|(v, di)| v / di).collect::<Vec<_>>(),
            x_exact.iter().zip(d).map(|(v, di)| v / di).collect::<Vec<_>>(),
        ),
        None => (outcome.x.clone(), x_exact),
    };
    let err: f64 = x.iter().zip(&x_exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = x_exact.iter().map(|v| v * v).sum::<f64>().sqrt();
    report.solution_error = Some(err / norm);
    *history = outcome.history;
    Ok(())
}

fn write_outputs(cfg: &BenchConfig, report: &BenchReport, history: &[(usize, f64)]) -> Result<()> {
    if let Some(path) = &cfg.history_path {
        if !history.is_empty() {
            mm::write_history_csv(history, std::fs::File::create(path)?)?;
        }
    }
    if let Some(path) = &cfg.report_path {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{}", report.to_json_line())?;
    }
    if let (Some(plot), Some(hist)) = (&cfg.plot_path, &cfg.history_path) {
        if !history.is_empty() {
            emit_plot_script(&[hist], std::fs::File::create(plot)?)?;
        }
    }
    Ok(())
}

fn gnuplot_quote(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Emits a gnuplot script drawing relative residual (log scale) against
/// iteration, one labelled line per history CSV.
pub fn emit_plot_script<P: AsRef<Path>, W: Write>(histories: &[P], mut sink: W) -> Result<()> {
    if histories.is_empty() {
        return Err(Error::InvalidParameter("no history files given".into()));
    }
    for p in histories {
        if !p.as_ref().is_file() {
            return Err(Error::MissingFile(p.as_ref().display().to_string()));
        }
    }
    writeln!(sink, "# relative residual against iteration")?;
    writeln!(sink, "set datafile separator \",\"")?;
    writeln!(sink, "set logscale y")?;
    writeln!(sink, "set format y \"10^{{%L}}\"")?;
    writeln!(sink, "set xlabel \"iteration\"")?;
    writeln!(sink, "set ylabel \"relative residual\"")?;
    writeln!(sink, "set key top right")?;
    let lines: Vec<String> = histories
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let label = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            format!(
                "\"{}\" using 1:2 skip 1 with lines title \"{}\"",
                gnuplot_quote(&p.display().to_string()),
                gnuplot_quote(&label)
            )
        })
        .collect();
    writeln!(sink, "plot {}", lines.join(", \\\n     "))?;
    Ok(())
}
