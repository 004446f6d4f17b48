//! `bench`: run one preconditioned CG benchmark and report it.
//!
//! Exit codes: 0 converged, 1 not converged, 2 input error, 3 breakdown.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};
use sparse_aib::bench::{self, BenchConfig, MatrixSource, PrecondKind, RunStatus};
use sparse_aib::{SparseSolveParams, StopRule};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Precond {
    None,
    Jacobi,
    Aib,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (nx, ny) = s.split_once(',').ok_or("expected NX,NY")?;
    let nx = nx.trim().parse().map_err(|_| format!("invalid NX '{nx}'"))?;
    let ny = ny.trim().parse().map_err(|_| format!("invalid NY '{ny}'"))?;
    Ok((nx, ny))
}

#[derive(Debug, Parser)]
#[command(name = "bench", version, about = "Preconditioned CG benchmark on an SPD matrix")]
#[command(group(ArgGroup::new("source").required(true).args(["matrix", "laplacian"])))]
struct Cli {
    /// Matrix Market file (coordinate real symmetric).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Generate a 2D five-point Laplacian on an NX x NY grid.
    #[arg(long, value_name = "NX,NY", value_parser = parse_grid)]
    laplacian: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value = "aib")]
    precond: Precond,
    /// Symmetric diagonal scaling.
    #[arg(long, value_enum, default_value = "off")]
    scale: Switch,
    /// Indices per projection step.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Inner residual-norm threshold.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Maximum nonzeros per column of U (excluding the unit diagonal).
    #[arg(long, default_value_t = 10)]
    lfil: usize,
    /// Cap on projection steps per column [default: 10 * lfil].
    #[arg(long)]
    max_steps: Option<usize>,
    /// Interpret eps relative to the norm of the bordering column.
    #[arg(long)]
    relative_eps: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    maxit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Workers for the preconditioner build (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Record every N-th iteration in the history.
    #[arg(long, default_value_t = 1)]
    history_stride: usize,
    /// Convergence history CSV (iter,relres).
    #[arg(long)]
    history: Option<PathBuf>,
    /// Append a JSON line with the report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write a gnuplot script for the history (requires --history).
    #[arg(long, requires = "history")]
    plot: Option<PathBuf>,
    /// Further history CSVs to draw in the same plot.
    #[arg(long, requires = "plot", num_args = 1..)]
    plot_with: Vec<PathBuf>,
}

impl Cli {
    fn config(&self) -> BenchConfig {
        let source = match (&self.matrix, self.laplacian) {
            (Some(p), _) => MatrixSource::File(p.clone()),
            (None, Some((nx, ny))) => MatrixSource::Laplacian { nx, ny },
            (None, None) => unreachable!("clap enforces a matrix source"),
        };
        let precond = match self.precond {
            Precond::None => PrecondKind::None,
            Precond::Jacobi => PrecondKind::Jacobi,
            Precond::Aib => PrecondKind::Aib,
        };
        let mut params = SparseSolveParams::new(self.m, self.eps, self.lfil);
        if let Some(s) = self.max_steps {
            params = params.with_max_steps(s);
        }
        if self.relative_eps {
            params = params.with_stop_rule(StopRule::Relative);
        }
        BenchConfig {
            scale: matches!(self.scale, Switch::On),
            params,
            tol: self.tol,
            maxit: self.maxit,
            seed: self.seed,
            threads: self.threads,
            history_stride: self.history_stride,
            history_path: self.history.clone(),
            report_path: self.report.clone(),
            plot_path: None,
            ..BenchConfig::new(source, precond)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = bench::run_benchmark(&cli.config());
    let mut report = run.report;

    if let (Some(plot), Some(hist)) = (&cli.plot, &cli.history) {
        if !run.history.is_empty() {
            let mut paths = vec![hist.clone()];
            paths.extend(cli.plot_with.iter().cloned());
            let written = std::fs::File::create(plot)
                .map_err(sparse_aib::Error::from)
                .and_then(|f| bench::emit_plot_script(&paths, f));
            if let Err(e) = written {
                report.status = RunStatus::InputError;
                report.error = Some(format!("plot script: {e}"));
            }
        }
    }

    print!("{}", report.render_table());
    if let Some(err) = report.solution_error {
        println!("relative solution error: {err:.3e}");
    }
    match report.status {
        RunStatus::Converged => ExitCode::SUCCESS,
        RunStatus::NotConverged => ExitCode::from(1),
        RunStatus::InputError => ExitCode::from(2),
        RunStatus::Breakdown => ExitCode::from(3),
    }
}
